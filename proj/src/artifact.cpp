#include "magpoly/artifact.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <openssl/evp.h>

namespace magpoly {
namespace {

static_assert(std::endian::native == std::endian::little,
              "artifact serialization assumes a little-endian host");

constexpr char kMagic[8] = {'M', 'G', 'P', 'O', 'L', 'Y', 'A', 'R'};

Digest sha256(const void* data, std::size_t size) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(data, size, out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size())
    throw FormatError("SHA-256 computation failed");
  return out;
}

class Writer {
 public:
  template <class T>
  void pod(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }
  void bytes(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  void matrix(const ComplexMatrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        pod(m(r, c).real());
        pod(m(r, c).imag());
      }
  }
  void vector(const RealVector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) pod(v[i]);
  }
  std::string& str() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& s, std::size_t end) : s_(s), end_(end) {}
  template <class T>
  T pod() {
    T v;
    need(sizeof(T));
    std::memcpy(&v, s_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void bytes(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, s_.data() + pos_, n);
    pos_ += n;
  }
  ComplexMatrix matrix(Eigen::Index n) {
    need(static_cast<std::size_t>(n * n) * 16);
    ComplexMatrix m(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < n; ++c) {
        const double re = pod<double>();
        const double im = pod<double>();
        m(r, c) = cplx(re, im);
      }
    return m;
  }
  RealVector vector(Eigen::Index n) {
    need(static_cast<std::size_t>(n) * 8);
    RealVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = pod<double>();
    return v;
  }
  bool done() const { return pos_ == end_; }

 private:
  void need(std::size_t n) const {
    if (n > end_ - pos_) throw FormatError("artifact truncated");
  }
  const std::string& s_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

void write_params_digest_input(Writer& w, const ComplexMatrix& a, const ComplexMatrix& b,
                               double eps_l, const ExpansionParams& p) {
  w.pod(static_cast<std::uint32_t>(a.rows()));
  w.matrix(a);
  w.matrix(b);
  w.pod(eps_l);
  w.pod(static_cast<std::int32_t>(p.k_max));
  w.pod(static_cast<std::int32_t>(p.gamma_max));
  w.pod(static_cast<std::int32_t>(p.m));
}

}  // namespace

Digest model_digest(const ComplexMatrix& a, const ComplexMatrix& b, double eps_l,
                    const ExpansionParams& params) {
  Writer w;
  write_params_digest_input(w, a, b, eps_l, params);
  return sha256(w.str().data(), w.str().size());
}

std::string to_hex(const Digest& d) {
  std::ostringstream os;
  for (auto byte : d) os << std::hex << std::setw(2) << std::setfill('0') << int(byte);
  return os.str();
}

Artifact build_artifact(const HermitianOperator& a, const HermitianOperator& b,
                        const ExpansionParams& params, double eps_l, Execution exec) {
  validate(params);
  Artifact art;
  art.a = a.matrix();
  art.b = b.matrix();
  art.eps_l = eps_l;
  art.basis = generate_lie_algebra(a, b, params.k_max, eps_l);
  art.sc = compute_structure_constants(art.basis, exec);
  art.tensor = symmetrize_to_T(compute_S(art.basis, art.sc, params, exec));
  art.tensor.basis_l1_norms =
      Eigen::Map<const RealVector>(art.basis.l1_norms.data(),
                                   static_cast<Eigen::Index>(art.basis.l1_norms.size()));
  art.tensor.model_digest = model_digest(art.a, art.b, eps_l, params);
  return art;
}

std::string serialize_artifact(const Artifact& art) {
  const auto& t = art.tensor;
  const auto& basis = art.basis;
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.pod(kArtifactVersion);
  w.pod(static_cast<std::uint8_t>(t.params.k_max));
  w.pod(static_cast<std::uint8_t>(t.params.gamma_max));
  w.pod(static_cast<std::uint8_t>(t.params.m));
  w.pod(static_cast<std::uint8_t>(basis.complete));
  w.pod(static_cast<std::uint32_t>(basis.size()));
  w.pod(static_cast<std::uint32_t>(art.a.rows()));
  w.pod(static_cast<std::uint32_t>(basis.max_depth));
  w.pod(art.eps_l);
  w.bytes(t.model_digest.data(), t.model_digest.size());
  w.matrix(art.a);
  w.matrix(art.b);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    w.pod(static_cast<std::uint32_t>(basis.depth[i]));
    w.pod(basis.l1_norms[i]);
    w.matrix(basis.elements[i]);
  }
  w.vector(basis.a_coeffs);
  w.vector(basis.b_coeffs);
  w.pod(static_cast<std::uint8_t>(art.sc.closed()));
  w.pod(static_cast<std::uint64_t>(art.sc.entries().size()));
  for (const auto& e : art.sc.entries()) {
    w.pod(e.i);
    w.pod(e.j);
    w.pod(e.k);
    w.pod(e.value);
  }
  w.pod(static_cast<std::uint64_t>(t.entries.size()));
  for (const auto& e : t.entries) {
    w.pod(e.key.k);
    w.pod(e.key.p);
    w.pod(e.key.mu);
    w.pod(static_cast<std::uint8_t>(e.key.gamma.size()));
    w.bytes(e.key.gamma.data(), e.key.gamma.size());
    w.pod(e.value);
  }
  const Digest tail = sha256(w.str().data(), w.str().size());
  w.bytes(tail.data(), tail.size());
  return std::move(w.str());
}

Artifact deserialize_artifact(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic + 4 + 32 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw FormatError("not a magpoly artifact");
  const std::size_t body = bytes.size() - 32;
  Reader r(bytes, body);
  char magic[8];
  r.bytes(magic, sizeof magic);
  const auto version = r.pod<std::uint32_t>();
  if (version != kArtifactVersion)
    throw FormatError("unsupported artifact version " + std::to_string(version));
  Digest tail;
  std::memcpy(tail.data(), bytes.data() + body, tail.size());
  if (sha256(bytes.data(), body) != tail) throw FormatError("artifact checksum mismatch");

  Artifact art;
  auto& t = art.tensor;
  auto& basis = art.basis;
  t.params.k_max = r.pod<std::uint8_t>();
  t.params.gamma_max = r.pod<std::uint8_t>();
  t.params.m = r.pod<std::uint8_t>();
  basis.complete = r.pod<std::uint8_t>() != 0;
  const auto dim_g = r.pod<std::uint32_t>();
  const auto dim_h = static_cast<Eigen::Index>(r.pod<std::uint32_t>());
  basis.max_depth = static_cast<int>(r.pod<std::uint32_t>());
  art.eps_l = r.pod<double>();
  r.bytes(t.model_digest.data(), t.model_digest.size());
  if (dim_h < 1 || dim_h > 4096 || dim_g > 1u << 20) throw FormatError("implausible artifact dimensions");
  art.a = r.matrix(dim_h);
  art.b = r.matrix(dim_h);
  for (std::uint32_t i = 0; i < dim_g; ++i) {
    basis.depth.push_back(static_cast<int>(r.pod<std::uint32_t>()));
    basis.l1_norms.push_back(r.pod<double>());
    basis.elements.push_back(r.matrix(dim_h));
  }
  basis.a_coeffs = r.vector(dim_g);
  basis.b_coeffs = r.vector(dim_g);
  const bool closed = r.pod<std::uint8_t>() != 0;
  const auto n_sc = r.pod<std::uint64_t>();
  std::vector<StructureEntry> sc_entries;
  for (std::uint64_t n = 0; n < n_sc; ++n) {
    StructureEntry e{};
    e.i = r.pod<std::uint32_t>();
    e.j = r.pod<std::uint32_t>();
    e.k = r.pod<std::uint32_t>();
    e.value = r.pod<double>();
    if (e.i >= dim_g || e.j >= dim_g || e.k >= dim_g) throw FormatError("structure index out of range");
    sc_entries.push_back(e);
  }
  art.sc = StructureConstants(dim_g, std::move(sc_entries), closed);

  const auto n_entries = r.pod<std::uint64_t>();
  t.dim_g = dim_g;
  for (std::uint64_t n = 0; n < n_entries; ++n) {
    CoeffEntry e;
    e.key.k = r.pod<std::uint8_t>();
    e.key.p = r.pod<std::uint8_t>();
    e.key.mu = r.pod<std::uint32_t>();
    e.key.gamma.resize(r.pod<std::uint8_t>());
    r.bytes(e.key.gamma.data(), e.key.gamma.size());
    e.value = r.pod<double>();
    if (e.key.mu >= dim_g || !key_admissible(e.key, t.params, true))
      throw FormatError("inadmissible coefficient key in artifact");
    t.entries.push_back(std::move(e));
  }
  if (!r.done()) throw FormatError("trailing bytes in artifact");
  if (model_digest(art.a, art.b, art.eps_l, t.params) != t.model_digest)
    throw FormatError("artifact model digest mismatch");
  t.basis_l1_norms = Eigen::Map<const RealVector>(basis.l1_norms.data(), dim_g);
  basis.finalize();
  return art;
}

void save_artifact(const Artifact& art, const std::filesystem::path& path) {
  const std::string bytes = serialize_artifact(art);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw FormatError("write failed for " + path.string());
}

Artifact load_artifact(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return deserialize_artifact(ss.str());
}

Artifact truncate_order(const Artifact& art, int k_max) {
  if (k_max < 1 || k_max > art.tensor.params.k_max)
    throw ValidationError("requested order outside the artifact's range");
  Artifact out = art;
  auto& e = out.tensor.entries;
  e.erase(std::remove_if(e.begin(), e.end(), [&](const CoeffEntry& c) { return c.key.k > k_max; }),
          e.end());
  out.tensor.params.k_max = k_max;
  out.tensor.model_digest = model_digest(out.a, out.b, out.eps_l, out.tensor.params);
  return out;
}

void write_text_dump(const Artifact& art, std::ostream& os, bool entries) {
  const auto& t = art.tensor;
  os << "format_version " << kArtifactVersion << '\n'
     << "k_M " << t.params.k_max << '\n'
     << "Gamma " << t.params.gamma_max << '\n'
     << "m " << t.params.m << '\n'
     << "dim_g " << t.dim_g << '\n'
     << "dim_H " << art.a.rows() << '\n'
     << "eps_L " << art.eps_l << '\n'
     << "basis_complete " << art.basis.complete << '\n'
     << "structure_entries " << art.sc.entries().size() << '\n'
     << "tensor_entries " << t.entries.size() << '\n'
     << "digest " << to_hex(t.model_digest) << '\n';
  os << std::setprecision(17);
  for (std::size_t i = 0; i < art.basis.size(); ++i)
    os << "basis " << i << " depth " << art.basis.depth[i] << " l1 " << art.basis.l1_norms[i]
       << '\n';
  if (!entries) return;
  for (const auto& e : t.entries) {
    os << "T " << int(e.key.k) << ' ' << int(e.key.p) << ' ' << e.key.mu << " (";
    for (std::size_t i = 0; i < e.key.gamma.size(); ++i)
      os << (i ? "," : "") << int(e.key.gamma[i]);
    os << ") " << e.value << '\n';
  }
}

}  // namespace magpoly

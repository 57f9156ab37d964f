#include "magpoly/models.hpp"

#include <random>

namespace magpoly {
namespace {

constexpr Eigen::Index kMaxHilbertDim = 1024;

/// Operator acting as `op` on site i and as identity elsewhere.
ComplexMatrix embed(const ComplexMatrix& op, int i, int n) {
  ComplexMatrix out = ComplexMatrix::Identity(1, 1);
  const Eigen::Index d = op.rows();
  for (int j = 0; j < n; ++j) {
    const ComplexMatrix factor = j == i ? op : ComplexMatrix::Identity(d, d);
    ComplexMatrix next(out.rows() * d, out.cols() * d);
    for (Eigen::Index r = 0; r < out.rows(); ++r)
      for (Eigen::Index c = 0; c < out.cols(); ++c)
        next.block(r * d, c * d, d, d) = out(r, c) * factor;
    out = std::move(next);
  }
  return out;
}

/// Local level of site i in basis index `state` (site 0 most significant).
int level(Eigen::Index state, int i, int n, int d) {
  for (int j = n - 1; j > i; --j) state /= d;
  return static_cast<int>(state % d);
}

}  // namespace

Eigen::Index ModelSpec::hilbert_dim() const {
  Eigen::Index dim = 1;
  for (int i = 0; i < n; ++i) dim *= local_dim();
  return dim;
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "sparse") return ModelKind::sparse;
  if (name == "dense") return ModelKind::dense;
  if (name == "rydberg") return ModelKind::rydberg;
  throw ValidationError("unknown model '" + name + "'");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::sparse: return "sparse";
    case ModelKind::dense: return "dense";
    case ModelKind::rydberg: return "rydberg";
  }
  return "?";
}

Model build_model(const ModelSpec& spec) {
  if (spec.n < 1) throw ValidationError("model needs at least one site");
  if (spec.n > 10 || spec.hilbert_dim() > kMaxHilbertDim)
    throw LimitError("model Hilbert space exceeds " + std::to_string(kMaxHilbertDim));
  const int n = spec.n;
  const Eigen::Index dim = spec.hilbert_dim();
  ComplexMatrix a = ComplexMatrix::Zero(dim, dim);
  ComplexMatrix b = ComplexMatrix::Zero(dim, dim);

  if (spec.kind == ModelKind::rydberg) {
    // levels 0, 1, r -> indices 0, 1, 2
    ComplexMatrix x = ComplexMatrix::Zero(3, 3);
    x(0, 0) = 1.0;
    x(2, 1) = 1.0;
    x(1, 2) = 1.0;
    ComplexMatrix z = ComplexMatrix::Zero(3, 3);
    z(0, 0) = 1.0;
    z(1, 1) = 1.0;
    z(2, 2) = -1.0;
    for (int i = 0; i < n; ++i) {
      ComplexMatrix q_rest = ComplexMatrix::Identity(dim, dim);
      for (Eigen::Index s = 0; s < dim; ++s)
        for (int j = 0; j < n; ++j)
          if (j != i && level(s, j, n, 3) == 2) q_rest(s, s) = 0.0;
      a += 0.5 * embed(x, i, n) * q_rest;
      b += 0.5 * embed(z, i, n);
    }
    return {HermitianOperator(a), HermitianOperator(b)};
  }

  ComplexMatrix pz = ComplexMatrix::Zero(2, 2);
  pz(0, 0) = 1.0;
  pz(1, 1) = -1.0;
  ComplexMatrix px = ComplexMatrix::Zero(2, 2);
  px(0, 1) = 1.0;
  px(1, 0) = 1.0;
  for (int i = 0; i < n; ++i) {
    b += embed(px, i, n);
    for (int j = i + 1; j < n; ++j) {
      if (spec.kind == ModelKind::sparse && j != i + 1) continue;
      const double coupling = spec.kind == ModelKind::dense ? 1.0 / (j - i) : 1.0;
      a += coupling * embed(pz, i, n) * embed(pz, j, n);
    }
  }
  return {HermitianOperator(a), HermitianOperator(b)};
}

ComplexMatrix ckp_gate(int n, double phi, int local_dim) {
  if (n < 1) throw ValidationError("gate needs at least one qubit");
  Eigen::Index dim = 1;
  for (int i = 0; i < n; ++i) dim *= local_dim;
  ComplexMatrix g = ComplexMatrix::Identity(dim, dim);
  const cplx phase = std::exp(cplx(0.0, phi));
  for (Eigen::Index s = 0; s < dim; ++s) {
    bool computational = true, all_one = true;
    for (int i = 0; i < n; ++i) {
      const int lv = level(s, i, n, local_dim);
      computational = computational && lv < 2;
      all_one = all_one && lv == 1;
    }
    if (computational && !all_one) g(s, s) = phase;
  }
  return g;
}

RealVector rz_generator(int n, int local_dim) {
  Eigen::Index dim = 1;
  for (int i = 0; i < n; ++i) dim *= local_dim;
  RealVector g = RealVector::Zero(dim);
  for (Eigen::Index s = 0; s < dim; ++s)
    for (int i = 0; i < n; ++i) {
      const int lv = level(s, i, n, local_dim);
      if (lv == 0) g[s] += 0.5;
      if (lv == 1) g[s] -= 0.5;
    }
  return g;
}

ComplexMatrix rz_product(int n, double theta, int local_dim) {
  const RealVector g = rz_generator(n, local_dim);
  ComplexVector diag(g.size());
  for (Eigen::Index s = 0; s < g.size(); ++s) diag[s] = std::exp(cplx(0.0, -theta * g[s]));
  return diag.asDiagonal();
}

std::vector<ComplexVector> symmetric_basis_states(int n, int local_dim) {
  Eigen::Index dim = 1;
  for (int i = 0; i < n; ++i) dim *= local_dim;
  std::vector<ComplexVector> out;
  for (int ones = 0; ones <= n; ++ones) {
    Eigen::Index index = 0;
    for (int i = 0; i < n; ++i) index = index * local_dim + (i < ones ? 1 : 0);
    ComplexVector psi = ComplexVector::Zero(dim);
    psi[index] = 1.0;
    out.push_back(std::move(psi));
  }
  return out;
}

ComplexVector haar_state(Eigen::Index dim, std::uint64_t seed) {
  if (dim < 1) throw ValidationError("state dimension must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  ComplexVector psi(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    psi[i] = cplx(re, im);
  }
  return psi / psi.norm();
}

}  // namespace magpoly

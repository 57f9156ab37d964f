#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "magpoly/coeff_tensor.hpp"
#include "magpoly/lie_algebra.hpp"

namespace magpoly {

inline constexpr std::uint32_t kArtifactVersion = 1;

using Digest = std::array<std::uint8_t, 32>;

/// SHA-256 over (A, B, eps_L, k_M, Gamma, m) in a canonical byte layout.
Digest model_digest(const ComplexMatrix& a, const ComplexMatrix& b, double eps_l,
                    const ExpansionParams& params);

std::string to_hex(const Digest& d);

/// Everything a downstream evaluator needs: generators, Lie basis, structure
/// constants and the symmetrized coefficient tensor.
struct Artifact {
  ComplexMatrix a, b;
  double eps_l = 1e-5;
  LieBasis basis;
  StructureConstants sc;
  CoeffTensor tensor;
};

/// Generates basis, structure constants, S and T for the model in one go.
Artifact build_artifact(const HermitianOperator& a, const HermitianOperator& b,
                        const ExpansionParams& params, double eps_l = 1e-5,
                        Execution exec = Execution::parallel);

/// Canonical little-endian serialization; the trailing 32 bytes are the
/// SHA-256 of everything before them.
std::string serialize_artifact(const Artifact& art);
Artifact deserialize_artifact(const std::string& bytes);

void save_artifact(const Artifact& art, const std::filesystem::path& path);
Artifact load_artifact(const std::filesystem::path& path);

/// Copy of the artifact restricted to orders k <= k_max (used to scan several
/// truncation orders from one compiled tensor).
Artifact truncate_order(const Artifact& art, int k_max);

/// Human-readable dump of header, basis summary and tensor entries.
void write_text_dump(const Artifact& art, std::ostream& os, bool entries = true);

}  // namespace magpoly

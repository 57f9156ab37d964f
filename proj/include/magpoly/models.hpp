#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "magpoly/common.hpp"
#include "magpoly/hermitian.hpp"

namespace magpoly {

enum class ModelKind { sparse, dense, rydberg };

struct ModelSpec {
  ModelKind kind = ModelKind::sparse;
  int n = 2;

  int local_dim() const noexcept { return kind == ModelKind::rydberg ? 3 : 2; }
  Eigen::Index hilbert_dim() const;
};

ModelKind parse_model_kind(const std::string& name);
std::string to_string(ModelKind kind);

struct Model {
  HermitianOperator a, b;
};

/// sparse: A = sum Z_i Z_{i+1}, B = sum X_i
/// dense:  A = sum_{i<j} Z_i Z_j / |i-j|, B = sum X_i
/// rydberg (perfect blockade, levels ordered 0, 1, r):
///         A = 1/2 sum X_i Q_[i], B = 1/2 sum Z_i
Model build_model(const ModelSpec& spec);

/// Diagonal C_kP(phi): e^{i phi} on every computational state except |1..1>,
/// which keeps phase 1. With local_dim 3, states containing |r> are left alone.
ComplexMatrix ckp_gate(int n, double phi, int local_dim = 2);

/// prod_i R_Z(theta) with R_Z = diag(e^{-i theta/2}, e^{i theta/2}) on the
/// qubit levels and identity on |r>.
ComplexMatrix rz_product(int n, double theta, int local_dim = 2);

/// Diagonal of rz_product, and its theta-derivative divided by i (the
/// generator): rz = exp(-i theta G) with G diagonal.
RealVector rz_generator(int n, int local_dim = 2);

/// |1>^{i} |0>^{n-i} for i = 0..n, in the local_dim^n space.
std::vector<ComplexVector> symmetric_basis_states(int n, int local_dim = 2);

/// Haar-random unit vector from normalized complex Gaussians.
ComplexVector haar_state(Eigen::Index dim, std::uint64_t seed);

}  // namespace magpoly

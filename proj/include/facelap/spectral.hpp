#pragma once

// Discrete Laplace operators on canonical patches and their spectra:
//   graph Laplacian     L = D - A                      (connectivity only)
//   cotan stiffness     S_ij = -(cot a_ij + cot b_ij)  (geometry)
//   Voronoi mass        B = diag(mixed Voronoi areas)
//   symmetrised         O = B^-1/2 S B^-1/2, same spectrum as B^-1 S

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "facelap/linalg.hpp"
#include "facelap/mesh.hpp"
#include "facelap/patch.hpp"

namespace facelap {

class DegenerateGeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense symmetric n x n matrix; construction rejects asymmetry above
// 1e-12 * max|A|.
class SymmetricOperator {
 public:
  SymmetricOperator() = default;
  explicit SymmetricOperator(Matrix m);

  std::size_t dimension() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

  friend bool operator==(const SymmetricOperator&, const SymmetricOperator&) = default;

 private:
  Matrix m_;
};

// Positive diagonal mass (mm^2).
class MassMatrix {
 public:
  MassMatrix() = default;
  explicit MassMatrix(std::vector<double> diagonal);

  std::size_t dimension() const { return d_.size(); }
  const std::vector<double>& diagonal() const { return d_; }
  double operator[](std::size_t i) const { return d_[i]; }

 private:
  std::vector<double> d_;
};

struct SpectralBasis {
  std::vector<double> eigenvalues;  // ascending, size k
  Matrix eigenvectors;              // n x k, orthonormal columns

  std::size_t dimension() const { return eigenvectors.rows(); }
  std::size_t size() const { return eigenvalues.size(); }
};

enum class MassScheme { MixedVoronoi, Barycentric };

SymmetricOperator graph_laplacian(std::span<const Face> faces, std::size_t n);

SymmetricOperator cotan_stiffness(std::span<const Vec3> vertices, std::span<const Face> faces);

MassMatrix voronoi_mass(std::span<const Vec3> vertices, std::span<const Face> faces,
                        MassScheme scheme = MassScheme::MixedVoronoi);

SymmetricOperator symmetrize(const SymmetricOperator& stiffness, const MassMatrix& mass);

// k smallest eigenpairs. Each eigenvector is signed so that its
// largest-magnitude entry is positive.
SpectralBasis eig_sym(const SymmetricOperator& a, std::size_t k);

// All non-zero eigenvalues of B^-1/2 S B^-1/2 for a patch, ascending.
// Zero modes (|lambda| <= 1e-9 max|lambda|) are dropped.
std::vector<double> shape_dna_spectrum(std::span<const Vec3> vertices, std::span<const Face> faces,
                                       MassScheme scheme = MassScheme::MixedVoronoi);

// The k smallest non-zero eigenvalues; throws if fewer exist.
std::vector<double> shape_dna(const CanonicalPatch& patch, std::span<const Face> faces, std::size_t k,
                              MassScheme scheme = MassScheme::MixedVoronoi);

// Basis of the canonical patch graph; computed once per (K, m).
SpectralBasis glf_basis(const PatchConfig& cfg, std::size_t k);

// 64-bit FNV-1a over (K, m); stamps basis and feature files.
std::uint64_t config_hash(const PatchConfig& cfg);

}  // namespace facelap

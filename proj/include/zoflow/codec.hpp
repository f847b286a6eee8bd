#pragma once

#include <cstdint>

#include "zoflow/linalg.hpp"

namespace zoflow {

/// Lossy linear encode/decode pair whose round trip D E is the orthogonal
/// projector onto a k-dimensional subspace of R^d (k < d).
class LinearCodec {
 public:
  /// decode has orthonormal columns; encode = decode^T.
  explicit LinearCodec(Mat decode);

  /// Orthonormal basis from the QR factorization of a seeded Gaussian d x k matrix.
  static LinearCodec random(Eigen::Index pixel_dim, Eigen::Index latent_dim, std::uint64_t seed);

  const Mat& encode_matrix() const { return encode_; }
  const Mat& decode_matrix() const { return decode_; }
  Eigen::Index pixel_dim() const { return decode_.rows(); }
  Eigen::Index latent_dim() const { return decode_.cols(); }

  Vec encode(const Vec& x) const;
  Vec decode(const Vec& latent) const;

  /// RMSE of the round trip against x: the best any latent can achieve.
  double floor_rmse(const Vec& x) const;

 private:
  Mat encode_;
  Mat decode_;
};

/// D E x.
Vec codec_roundtrip(const LinearCodec& codec, const Vec& x);

}  // namespace zoflow

#include "zoflow/codec.hpp"

#include "zoflow/rng.hpp"

namespace zoflow {

LinearCodec::LinearCodec(Mat decode) : encode_(decode.transpose()), decode_(std::move(decode)) {
  const Eigen::Index d = decode_.rows();
  const Eigen::Index k = decode_.cols();
  if (k < 1 || k >= d) throw InvalidArgument("LinearCodec: need 1 <= latent_dim < pixel_dim");
  const Mat gram = encode_ * decode_;
  if ((gram - Mat::Identity(k, k)).cwiseAbs().maxCoeff() > 1e-10) {
    throw InvalidArgument("LinearCodec: decode columns are not orthonormal");
  }
}

LinearCodec LinearCodec::random(Eigen::Index pixel_dim, Eigen::Index latent_dim, std::uint64_t seed) {
  if (latent_dim < 1 || latent_dim >= pixel_dim) {
    throw InvalidArgument("LinearCodec::random: need 1 <= latent_dim < pixel_dim");
  }
  Rng rng = make_rng(seed, Stream::kCodec);
  Mat g(pixel_dim, latent_dim);
  for (Eigen::Index j = 0; j < latent_dim; ++j) g.col(j) = standard_normal(rng, pixel_dim);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(pixel_dim, latent_dim);
  return LinearCodec(std::move(q));
}

Vec LinearCodec::encode(const Vec& x) const {
  require_dim(x, pixel_dim(), "codec encode");
  return encode_ * x;
}

Vec LinearCodec::decode(const Vec& latent) const {
  require_dim(latent, latent_dim(), "codec decode");
  return decode_ * latent;
}

double LinearCodec::floor_rmse(const Vec& x) const { return rmse(codec_roundtrip(*this, x), x); }

Vec codec_roundtrip(const LinearCodec& codec, const Vec& x) { return codec.decode(codec.encode(x)); }

}  // namespace zoflow

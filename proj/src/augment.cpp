#include "ebmorph/augment.hpp"

namespace ebmorph {

AugmentConfig AugmentConfig::for_passband(Passband band) {
  AugmentConfig cfg;
  switch (band) {
    case Passband::GaiaG:
      cfg.noise_sigma = 0.001;
      cfg.target_points = 50;
      break;
    case Passband::I:
      cfg.noise_sigma = 0.005;
      cfg.target_points = 100;
      break;
    case Passband::TESS:
      cfg.noise_sigma = 0.001;
      cfg.target_points = 100;
      break;
  }
  return cfg;
}

void AugmentConfig::validate() const {
  if (!(noise_sigma >= 0.0)) throw Error(ErrorKind::InvalidSpec, "noise_sigma must be >= 0");
  if (target_points < 10) throw Error(ErrorKind::InvalidSpec, "target_points must be >= 10");
  if (!(outlier_scale >= 0.0)) throw Error(ErrorKind::InvalidSpec, "outlier_scale must be >= 0");
}

}  // namespace ebmorph

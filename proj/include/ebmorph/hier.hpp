#pragma once

// Two-stage classification: a binary morphology model picks the branch, then
// only that branch's spot model runs.

#include "ebmorph/curve.hpp"
#include "ebmorph/imaging.hpp"
#include "ebmorph/synth.hpp"
#include "ebmorph/training.hpp"

namespace ebmorph {

class ImageClassifier {
 public:
  virtual ~ImageClassifier() = default;
  // P(class 1 | image).
  virtual double probability(const ImageRaster& image) const = 0;
};

class CnnClassifier : public ImageClassifier {
 public:
  explicit CnnClassifier(const Checkpoint& ckpt);
  double probability(const ImageRaster& image) const override;

 private:
  CompactCnn<float> model_;
};

struct HierLabel {
  Morphology morphology = Morphology::Detached;
  bool has_spot = false;
  double p_morph = 0.5;  // P(overcontact)
  double p_spot = 0.5;   // P(spot) from the selected branch

  bool operator==(const HierLabel&) const = default;
};

// Class 1 is chosen only when its probability exceeds 0.5, so an exact tie
// resolves to Detached / no spot.
HierLabel classify_hierarchical(const ImageClassifier& binary,
                                const ImageClassifier& detached_spot,
                                const ImageClassifier& overcontact_spot,
                                const PhasedCurve& curve, const ImagingConfig& imaging = {});

HierLabel classify_hierarchical(const Checkpoint& binary, const Checkpoint& detached_spot,
                                const Checkpoint& overcontact_spot, const PhasedCurve& curve,
                                const ImagingConfig& imaging = {});

// Observational preprocessing: fold, optionally bin (n_bins == 0 skips it),
// normalize to the maximum flux and rotate the minimum to phase 0.
PhasedCurve preprocess_observation(const LightCurve& curve, const Ephemeris& eph,
                                   std::size_t n_bins = 100);

}  // namespace ebmorph

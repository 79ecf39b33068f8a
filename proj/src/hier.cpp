#include "ebmorph/hier.hpp"

namespace ebmorph {

CnnClassifier::CnnClassifier(const Checkpoint& ckpt) : model_(ckpt.model()) {}

double CnnClassifier::probability(const ImageRaster& image) const {
  Workspace<float> ws;
  return softmax(model_.forward(image, ws))[1];
}

HierLabel classify_hierarchical(const ImageClassifier& binary,
                                const ImageClassifier& detached_spot,
                                const ImageClassifier& overcontact_spot,
                                const PhasedCurve& curve, const ImagingConfig& imaging) {
  // Models were trained on 8-bit images; feed them the same quantization.
  const ImageRaster image = quantized(curve_to_image(curve, imaging));
  HierLabel out;
  out.p_morph = binary.probability(image);
  out.morphology = out.p_morph > 0.5 ? Morphology::Overcontact : Morphology::Detached;
  const ImageClassifier& spot =
      out.morphology == Morphology::Overcontact ? overcontact_spot : detached_spot;
  out.p_spot = spot.probability(image);
  out.has_spot = out.p_spot > 0.5;
  return out;
}

HierLabel classify_hierarchical(const Checkpoint& binary, const Checkpoint& detached_spot,
                                const Checkpoint& overcontact_spot, const PhasedCurve& curve,
                                const ImagingConfig& imaging) {
  return classify_hierarchical(CnnClassifier(binary), CnnClassifier(detached_spot),
                               CnnClassifier(overcontact_spot), curve, imaging);
}

PhasedCurve preprocess_observation(const LightCurve& curve, const Ephemeris& eph,
                                   std::size_t n_bins) {
  PhasedCurve folded = phase_fold(curve, eph);
  if (n_bins > 0) folded = bin_phases(folded, n_bins);
  return align_minimum(normalize_max_flux(folded));
}

}  // namespace ebmorph

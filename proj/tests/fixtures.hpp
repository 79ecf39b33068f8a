#pragma once

// Published confusion counts with their two-decimal metrics: eight rows of
// morphology results and eight rows of spot-detection results.

#include <array>
#include <cstdint>

namespace fixtures {

struct MetricRow {
  const char* name;
  double accuracy, precision, recall, f1;
  std::uint64_t tn, fp, fn, tp;
};

inline constexpr std::array<MetricRow, 8> kMorphologyRows{{
    {"tess_res", 1.00, 1.0, 1.00, 1.00, 52, 0, 0, 90},
    {"tess_vit", 1.00, 1.0, 1.00, 1.00, 52, 0, 0, 90},
    {"gaia_res", 0.98, 1.0, 0.97, 0.98, 52, 0, 3, 87},
    {"gaia_vit", 0.94, 1.0, 0.91, 0.95, 52, 0, 8, 82},
    {"ogle_i_res", 0.90, 0.81, 0.96, 0.88, 107, 17, 3, 73},
    {"ogle_i_vit", 0.87, 0.77, 0.95, 0.85, 102, 22, 4, 72},
    {"ogle_gaia_res", 0.97, 0.95, 0.97, 0.96, 120, 4, 2, 74},
    {"ogle_gaia_vit", 0.94, 0.90, 0.96, 0.93, 116, 8, 3, 73},
}};

inline constexpr std::array<MetricRow, 8> kSpotRows{{
    {"overcontact_gaia_resnet", 0.60, 0.63, 0.52, 0.57, 30, 14, 22, 24},
    {"overcontact_tess_resnet", 0.50, 0.51, 0.83, 0.63, 7, 37, 8, 38},
    {"overcontact_gaia_vit", 0.53, 0.52, 1.00, 0.69, 2, 42, 0, 46},
    {"overcontact_tess_vit", 0.49, 0.50, 0.76, 0.60, 9, 35, 11, 35},
    {"detached_gaia_resnet", 0.63, 0.42, 0.29, 0.34, 28, 7, 12, 5},
    {"detached_tess_resnet", 0.62, 0.43, 0.59, 0.50, 22, 13, 7, 10},
    {"detached_gaia_vit", 0.67, 0.00, 0.00, 0.00, 35, 0, 17, 0},
    {"detached_tess_vit", 0.63, 0.00, 0.00, 0.00, 33, 2, 17, 0},
}};

// Two-decimal rounding tolerance. One published accuracy (189/200 = 0.945
// printed as 0.94) sits exactly on the rounding boundary, so the comparison
// allows for the binary representation of 0.945.
inline constexpr double kRoundingTolerance = 0.005 + 1e-9;

}  // namespace fixtures

#pragma once

#include "beamxfer/antenna.hpp"
#include "beamxfer/raytracer.hpp"

#include <array>
#include <limits>
#include <vector>

namespace beamxfer {

inline constexpr int kNumBpls = kGnbBeams * kUeBeams;

// Sentinel stored in every entry of a matrix built from zero paths.
inline constexpr double kNoPath = -std::numeric_limits<double>::infinity();

constexpr int encode_bpl(int gnb_beam, int ue_beam) { return gnb_beam * kUeBeams + ue_beam; }
constexpr int bpl_gnb_beam(int class_id) { return class_id / kUeBeams; }
constexpr int bpl_ue_beam(int class_id) { return class_id % kUeBeams; }

// RSS in dBm for every gNB beam (row) / UE beam (column) pair.
struct BplMatrix {
    int gnb_id = -1;
    Vec3 ue_position;
    std::array<double, kNumBpls> values{};

    double at(int gnb_beam, int ue_beam) const {
        return values[static_cast<std::size_t>(encode_bpl(gnb_beam, ue_beam))];
    }
    bool no_path() const;
    double max_rss() const;
};

struct BplLabel {
    int class_id = 0;
    double rss_dbm = 0.0;

    int gnb_beam() const { return bpl_gnb_beam(class_id); }
    int ue_beam() const { return bpl_ue_beam(class_id); }
};

// Non-coherent power sum over paths:
//   RSS_ij [mW] = sum_k 10^((P_tx - PL_k + G_i(AoD_k) + G_j(AoA_k)) / 10).
// Path angles are global; each array's boresight azimuth rotates them into
// the array frame.
BplMatrix compute_bpl_matrix(const std::vector<PropagationPath>& paths, const Codebook& gnb_cb, const Codebook& ue_cb,
                             double tx_power_dbm, double gnb_boresight_az_deg = 0.0,
                             double ue_boresight_az_deg = 0.0);

// k strongest finite entries, descending; ties go to the lower class id.
std::vector<BplLabel> top_k(const BplMatrix& matrix, int k);

// Strict: the best entry must exceed the threshold.
bool is_covered(const BplMatrix& matrix, double threshold_dbm);

}  // namespace beamxfer

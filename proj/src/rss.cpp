#include "beamxfer/rss.hpp"

#include "beamxfer/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace beamxfer {

bool BplMatrix::no_path() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return v == kNoPath; });
}

double BplMatrix::max_rss() const { return *std::max_element(values.begin(), values.end()); }

BplMatrix compute_bpl_matrix(const std::vector<PropagationPath>& paths, const Codebook& gnb_cb, const Codebook& ue_cb,
                             double tx_power_dbm, double gnb_boresight_az_deg, double ue_boresight_az_deg) {
    if (gnb_cb.size() != kGnbBeams || ue_cb.size() != kUeBeams)
        fail(ErrorKind::ShapeMismatch, "BPL matrix needs codebooks of size " + std::to_string(kGnbBeams) + " and " +
                                           std::to_string(kUeBeams) + ", got " + std::to_string(gnb_cb.size()) +
                                           " and " + std::to_string(ue_cb.size()));
    BplMatrix m;
    if (paths.empty()) {
        m.values.fill(kNoPath);
        return m;
    }
    std::array<double, kNumBpls> mw{};
    std::array<double, kGnbBeams> g_tx{};
    std::array<double, kUeBeams> g_rx{};
    for (const auto& p : paths) {
        const double aod_az = wrap_azimuth_deg(p.aod.azimuth_deg - gnb_boresight_az_deg);
        const double aoa_az = wrap_azimuth_deg(p.aoa.azimuth_deg - ue_boresight_az_deg);
        for (int i = 0; i < kGnbBeams; ++i)
            g_tx[static_cast<std::size_t>(i)] = std::pow(10.0, gain_dbi(gnb_cb, i, aod_az, p.aod.elevation_deg) / 10.0);
        for (int j = 0; j < kUeBeams; ++j)
            g_rx[static_cast<std::size_t>(j)] = std::pow(10.0, gain_dbi(ue_cb, j, aoa_az, p.aoa.elevation_deg) / 10.0);
        const double budget_mw = std::pow(10.0, (tx_power_dbm - p.path_loss_db) / 10.0);
        for (int i = 0; i < kGnbBeams; ++i) {
            const double row = budget_mw * g_tx[static_cast<std::size_t>(i)];
            for (int j = 0; j < kUeBeams; ++j)
                mw[static_cast<std::size_t>(encode_bpl(i, j))] += row * g_rx[static_cast<std::size_t>(j)];
        }
    }
    for (std::size_t c = 0; c < mw.size(); ++c) m.values[c] = mw[c] > 0.0 ? 10.0 * std::log10(mw[c]) : kNoPath;
    return m;
}

std::vector<BplLabel> top_k(const BplMatrix& matrix, int k) {
    if (k < 1) fail(ErrorKind::InvalidParameter, "top_k requires k >= 1");
    std::vector<int> ids;
    ids.reserve(kNumBpls);
    for (int c = 0; c < kNumBpls; ++c)
        if (std::isfinite(matrix.values[static_cast<std::size_t>(c)])) ids.push_back(c);
    const auto take = std::min<std::size_t>(ids.size(), static_cast<std::size_t>(k));
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(take), ids.end(), [&](int a, int b) {
        const double va = matrix.values[static_cast<std::size_t>(a)];
        const double vb = matrix.values[static_cast<std::size_t>(b)];
        return va != vb ? va > vb : a < b;
    });
    std::vector<BplLabel> labels;
    labels.reserve(take);
    for (std::size_t n = 0; n < take; ++n) labels.push_back({ids[n], matrix.values[static_cast<std::size_t>(ids[n])]});
    return labels;
}

bool is_covered(const BplMatrix& matrix, double threshold_dbm) {
    double best = kNoPath;
    for (double v : matrix.values)
        if (std::isfinite(v)) best = std::max(best, v);
    return std::isfinite(best) && best > threshold_dbm;
}

}  // namespace beamxfer

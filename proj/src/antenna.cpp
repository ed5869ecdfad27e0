#include "beamxfer/antenna.hpp"

#include "beamxfer/error.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

namespace beamxfer {

CodebookLayout default_layout(ArraySide side) {
    if (side == ArraySide::Gnb) return {16, 4, -60.0, 60.0, -30.0, 0.0};
    return {8, 2, -180.0, 180.0, -30.0, 30.0};
}

Codebook build_codebook(ArraySide side, int rows, int cols, const CodebookLayout& layout, double spacing) {
    if (rows < 1 || cols < 1) fail(ErrorKind::InvalidParameter, "array dimensions must be positive");
    if (layout.azimuth_steps < 1 || layout.elevation_steps < 1)
        fail(ErrorKind::InvalidParameter, "codebook needs at least one azimuth and one elevation step");
    if (!(spacing > 0.0)) fail(ErrorKind::InvalidParameter, "element spacing must be positive");
    if (!(layout.azimuth_max_deg > layout.azimuth_min_deg) || !(layout.elevation_max_deg >= layout.elevation_min_deg))
        fail(ErrorKind::InvalidParameter, "codebook angular spans must be ordered");

    Codebook cb;
    cb.side = side;
    cb.rows = rows;
    cb.cols = cols;
    cb.element_spacing_wavelengths = spacing;
    const double az_step = (layout.azimuth_max_deg - layout.azimuth_min_deg) / layout.azimuth_steps;
    const double el_step = (layout.elevation_max_deg - layout.elevation_min_deg) / layout.elevation_steps;
    for (int e = 0; e < layout.elevation_steps; ++e) {
        for (int a = 0; a < layout.azimuth_steps; ++a) {
            cb.entries.push_back({layout.azimuth_min_deg + (a + 0.5) * az_step,
                                  layout.elevation_min_deg + (e + 0.5) * el_step});
        }
    }
    return cb;
}

Codebook build_codebook(ArraySide side, int rows, int cols, int num_entries, double spacing) {
    if (num_entries < 1) fail(ErrorKind::InvalidParameter, "num_entries must be >= 1");
    CodebookLayout layout = default_layout(side);
    if (layout.azimuth_steps * layout.elevation_steps != num_entries) {
        if (num_entries % layout.elevation_steps != 0) layout.elevation_steps = 1;
        layout.azimuth_steps = num_entries / layout.elevation_steps;
    }
    return build_codebook(side, rows, cols, layout, spacing);
}

Codebook gnb_codebook() { return build_codebook(ArraySide::Gnb, 8, 8, kGnbBeams); }
Codebook ue_codebook() { return build_codebook(ArraySide::Ue, 4, 4, kUeBeams); }

namespace {

// |sum_{m<n} exp(i m x)|^2 = sin^2(n x / 2) / sin^2(x / 2).
double linear_array_power(int n, double x) {
    const double den = std::sin(0.5 * x);
    if (std::abs(den) < 1e-12) return static_cast<double>(n) * n;
    const double num = std::sin(0.5 * n * x);
    return (num * num) / (den * den);
}

}  // namespace

double gain_dbi(const Codebook& cb, int beam_id, double azimuth_deg, double elevation_deg) {
    if (beam_id < 0 || beam_id >= cb.size())
        fail(ErrorKind::OutOfRange, "beam_id " + std::to_string(beam_id) + " outside codebook of size " +
                                        std::to_string(cb.size()));
    const Direction steer = cb.entries[static_cast<std::size_t>(beam_id)];
    // Direction cosines in the array plane: u horizontal, v vertical.
    const double el = deg2rad(elevation_deg);
    const double az = deg2rad(azimuth_deg);
    const double u = std::cos(el) * std::sin(az);
    const double v = std::sin(el);
    const double el0 = deg2rad(steer.elevation_deg);
    const double az0 = deg2rad(steer.azimuth_deg);
    const double u0 = std::cos(el0) * std::sin(az0);
    const double v0 = std::sin(el0);
    const double k = 2.0 * std::numbers::pi * cb.element_spacing_wavelengths;
    const double power = linear_array_power(cb.cols, k * (u - u0)) * linear_array_power(cb.rows, k * (v - v0));
    const double gain = power / cb.element_count();
    if (!(gain > 0.0)) return kGainFloorDbi;
    return std::max(10.0 * std::log10(gain), kGainFloorDbi);
}

void write_codebook_csv(std::ostream& out, const Codebook& cb) {
    const auto precision = out.precision();
    out << "beam_id,az_deg,el_deg\n" << std::setprecision(10);
    for (int i = 0; i < cb.size(); ++i) {
        out << i << ',' << cb.entries[static_cast<std::size_t>(i)].azimuth_deg << ','
            << cb.entries[static_cast<std::size_t>(i)].elevation_deg << '\n';
    }
    out.precision(precision);
}

}  // namespace beamxfer

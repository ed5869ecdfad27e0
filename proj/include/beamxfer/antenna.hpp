#pragma once

#include "beamxfer/geometry.hpp"

#include <ostream>
#include <vector>

namespace beamxfer {

enum class ArraySide { Gnb, Ue };

// Steering grid: azimuth_steps x elevation_steps cells over the given spans,
// one beam at each cell centre, elevation-major / azimuth-minor ordering.
struct CodebookLayout {
    int azimuth_steps = 16;
    int elevation_steps = 4;
    double azimuth_min_deg = -60.0;
    double azimuth_max_deg = 60.0;
    double elevation_min_deg = -30.0;
    double elevation_max_deg = 0.0;
};

CodebookLayout default_layout(ArraySide side);

struct Codebook {
    ArraySide side = ArraySide::Gnb;
    int rows = 8;  // vertical elements
    int cols = 8;  // horizontal elements
    double element_spacing_wavelengths = 0.5;
    std::vector<Direction> entries;

    int size() const { return static_cast<int>(entries.size()); }
    int element_count() const { return rows * cols; }
};

inline constexpr int kGnbBeams = 64;
inline constexpr int kUeBeams = 16;
inline constexpr double kGainFloorDbi = -40.0;

Codebook build_codebook(ArraySide side, int rows, int cols, int num_entries, double spacing_wavelengths = 0.5);
Codebook build_codebook(ArraySide side, int rows, int cols, const CodebookLayout& layout,
                        double spacing_wavelengths = 0.5);

// 8x8 gNB array with 64 beams, 4x4 UE array with 16 beams.
Codebook gnb_codebook();
Codebook ue_codebook();

// Gain of beam `beam_id` toward (azimuth, elevation) in the array frame
// (boresight = azimuth 0, elevation 0). Uniform planar array factor with
// isotropic elements, normalised so the main-lobe peak equals the element
// count; floored at kGainFloorDbi.
double gain_dbi(const Codebook& codebook, int beam_id, double azimuth_deg, double elevation_deg);

void write_codebook_csv(std::ostream& out, const Codebook& codebook);

}  // namespace beamxfer

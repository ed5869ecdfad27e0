#include "beamxfer/error.hpp"
#include "beamxfer/random.hpp"

#include <numeric>

namespace beamxfer {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidParameter: return "invalid_parameter";
        case ErrorKind::PlacementFailure: return "placement_failure";
        case ErrorKind::Parse: return "parse_error";
        case ErrorKind::InvariantViolation: return "invariant_violation";
        case ErrorKind::Domain: return "domain_error";
        case ErrorKind::ShapeMismatch: return "shape_mismatch";
        case ErrorKind::OutOfRange: return "out_of_range";
        case ErrorKind::NonFinite: return "non_finite";
        case ErrorKind::EmptyDataset: return "empty_dataset";
        case ErrorKind::Io: return "io_error";
    }
    return "unknown";
}

std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
    if (bound <= 1) return 0;
    // Largest multiple of bound representable; values above it are rejected.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t r;
    do {
        r = rng();
    } while (r >= limit);
    return r % bound;
}

double uniform_unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<std::size_t> random_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = uniform_below(rng, i);
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

}  // namespace beamxfer

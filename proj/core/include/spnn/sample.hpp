#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "spnn/netcore.hpp"

namespace spnn {

/// One labelled network input spanning several frequencies and time slots.
/// Column `slot * freq_count + freq` holds the port amplitudes for that pair.
struct Sample {
    CMatrix inputs;
    std::size_t freq_count = 1;
    std::size_t slot_count = 1;
    std::size_t label = 0;

    std::size_t columns() const { return freq_count * slot_count; }

    /// Expands into per-(frequency, slot) fields for `detect`.
    std::vector<ComplexField> fields(const std::vector<double>& frequencies_hz) const;
};

/// Mean of |x|^2 summed over ports, taken over every column of every sample.
double mean_column_energy(std::span<const Sample> samples);

/// Multiplies every input amplitude by `factor`.
void scale_inputs(std::span<Sample> samples, double factor);

}  // namespace spnn

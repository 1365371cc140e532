#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "rifs/ifs.hpp"

namespace rifs {

// vectors[n] = (z_n, z_{n+1}, ..., z_{n+l-1}); for multi-channel series each
// z is the full channel row, so a vector has l * channels entries.
struct DelayVectorSet {
  int l = 0;
  int channels = 1;
  std::vector<double> data;
  std::vector<int> labels;  // -1 while unset

  int dim() const { return l * channels; }
  std::size_t size() const { return dim() ? data.size() / static_cast<std::size_t>(dim()) : 0; }
  std::span<const double> vec(std::size_t n) const {
    return {data.data() + n * static_cast<std::size_t>(dim()), static_cast<std::size_t>(dim())};
  }
};

DelayVectorSet embed(const ObservationSeries& obs, int l);

// Inverse of embed: the first vector followed by the last entry of every
// later vector.
ObservationSeries recover_series(const DelayVectorSet& dvs);

// CSV with header n,v_1..v_D,label.
void write_delay_csv(std::ostream& os, const DelayVectorSet& dvs);
DelayVectorSet read_delay_csv(std::istream& is, int channels = 1);

}  // namespace rifs

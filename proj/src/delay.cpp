#include "rifs/delay.hpp"

#include <istream>
#include <ostream>

#include "rifs/error.hpp"
#include "rifs/io.hpp"

namespace rifs {

DelayVectorSet embed(const ObservationSeries& obs, int l) {
  if (l < 2) fail(ErrorCode::InvalidArgument, "embed: delay length must be at least 2");
  if (obs.channels < 1) fail(ErrorCode::InvalidArgument, "embed: observation series has no channels");
  const std::size_t n = obs.size();
  if (n < static_cast<std::size_t>(l))
    fail(ErrorCode::InvalidArgument, "embed: series of length " + std::to_string(n) + " shorter than delay " +
                                         std::to_string(l));
  DelayVectorSet d;
  d.l = l;
  d.channels = obs.channels;
  const std::size_t rows = n - static_cast<std::size_t>(l) + 1;
  const std::size_t c = static_cast<std::size_t>(obs.channels);
  d.data.reserve(rows * static_cast<std::size_t>(l) * c);
  for (std::size_t i = 0; i < rows; ++i)
    d.data.insert(d.data.end(), obs.values.begin() + static_cast<std::ptrdiff_t>(i * c),
                  obs.values.begin() + static_cast<std::ptrdiff_t>((i + static_cast<std::size_t>(l)) * c));
  d.labels.assign(rows, -1);
  return d;
}

ObservationSeries recover_series(const DelayVectorSet& dvs) {
  ObservationSeries obs;
  obs.channels = dvs.channels;
  obs.observable_id = "recovered";
  if (dvs.size() == 0) return obs;
  const auto c = static_cast<std::size_t>(dvs.channels);
  auto first = dvs.vec(0);
  obs.values.assign(first.begin(), first.end());
  for (std::size_t n = 1; n < dvs.size(); ++n) {
    auto v = dvs.vec(n);
    obs.values.insert(obs.values.end(), v.end() - static_cast<std::ptrdiff_t>(c), v.end());
  }
  return obs;
}

void write_delay_csv(std::ostream& os, const DelayVectorSet& dvs) {
  os << 'n';
  for (int j = 1; j <= dvs.dim(); ++j) os << ",v_" << j;
  os << ",label\n";
  for (std::size_t n = 0; n < dvs.size(); ++n) {
    os << n;
    for (double x : dvs.vec(n)) os << ',' << fmt(x);
    os << ',' << (n < dvs.labels.size() ? dvs.labels[n] : -1) << '\n';
  }
}

DelayVectorSet read_delay_csv(std::istream& is, int channels) {
  CsvTable t = read_csv(is);
  std::vector<int> cols;
  for (int j = 1;; ++j) {
    int c = t.column("v_" + std::to_string(j));
    if (c < 0) break;
    cols.push_back(c);
  }
  if (cols.empty() || channels < 1 || cols.size() % static_cast<std::size_t>(channels) != 0)
    fail(ErrorCode::Io, "delay csv: v_* columns missing or not a multiple of the channel count");
  DelayVectorSet d;
  d.channels = channels;
  d.l = static_cast<int>(cols.size()) / channels;
  int lc = t.column("label");
  for (const auto& r : t.rows) {
    for (int c : cols) d.data.push_back(parse_double(r[static_cast<std::size_t>(c)]));
    d.labels.push_back(lc >= 0 ? static_cast<int>(parse_int(r[static_cast<std::size_t>(lc)])) : -1);
  }
  return d;
}

}  // namespace rifs

#include "tvhsd/error.hpp"
#include "tvhsd/harness.hpp"

namespace tvhsd::harness {

Metrics compute_metrics(std::span<const int> truth, std::span<const int> predicted,
                        std::size_t num_classes) {
  if (truth.size() != predicted.size()) {
    throw ShapeError(std::to_string(truth.size()) + " labels vs " +
                     std::to_string(predicted.size()) + " predictions");
  }
  Metrics m;
  m.n = truth.size();
  m.per_class.resize(num_classes);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto t = static_cast<std::size_t>(truth[i]);
    const auto p = static_cast<std::size_t>(predicted[i]);
    if (t >= num_classes || p >= num_classes) throw ArgumentError("class index out of range");
    if (t == p) {
      ++m.per_class[t].tp;
      ++correct;
    } else {
      ++m.per_class[p].fp;
      ++m.per_class[t].fn;
    }
  }
  for (const ClassCounts& c : m.per_class) {
    const double precision = c.tp + c.fp ? double(c.tp) / double(c.tp + c.fp) : 0.0;
    const double recall = c.tp + c.fn ? double(c.tp) / double(c.tp + c.fn) : 0.0;
    const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    m.macro_precision += precision;
    m.macro_recall += recall;
    m.macro_f1 += f1;
  }
  const double k = static_cast<double>(num_classes);
  m.macro_precision /= k;
  m.macro_recall /= k;
  m.macro_f1 /= k;
  m.accuracy = m.n ? double(correct) / double(m.n) : 0.0;
  return m;
}

}  // namespace tvhsd::harness

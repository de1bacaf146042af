#pragma once

#include <string>
#include <vector>

namespace sdcoag {

struct Observation {
  std::string quantity;
  double value = 0.0;
};

/// Structured pass/fail record produced by a numerical check. `parameters`
/// carries a JSON echo of the exact configuration so any report can be
/// replayed from its own content.
struct ExperimentReport {
  std::string name;
  std::string claim;       // the mathematical statement under test
  std::string parameters;  // JSON echo of the configuration used
  std::vector<Observation> observed;
  std::string threshold;   // human-readable pass criterion
  bool pass = false;
  bool exploratory = false;  // excluded from suite gating
  std::string data_file;     // relative path of an optional series CSV
  std::string data_csv;      // contents for data_file, written by the suite runner

  const Observation* find(const std::string& quantity) const {
    for (const auto& o : observed) {
      if (o.quantity == quantity) return &o;
    }
    return nullptr;
  }
};

}  // namespace sdcoag

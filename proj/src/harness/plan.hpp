#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "eaglass/disorder.hpp"
#include "eaglass/harness.hpp"

namespace eaglass::harness::detail {

struct CsvFile {
  std::string name;
  std::string text;
};

struct Reduction {
  json result;
  bool pass = true;
  std::string status = "ok";
  std::vector<CsvFile> files;
};

/// One experiment as independent tasks plus an order-canonical reducer.
struct Plan {
  std::size_t tasks = 0;
  std::function<json(std::size_t)> task;
  std::function<SeedSpec(std::size_t)> seed_of;
  std::function<Reduction(const std::vector<json>&)> reduce;
};

Plan make_plan(const ExperimentConfig& config);

json seed_json(const SeedSpec& s);

// Shortest round-trip decimal form.
std::string number(double x);

class Csv {
 public:
  explicit Csv(std::vector<std::string> columns);

  template <class... T>
  Csv& row(const T&... cells) {
    std::vector<std::string> r;
    (r.push_back(cell(cells)), ...);
    add(std::move(r));
    return *this;
  }
  Csv& footer(const std::string& line);
  CsvFile file(std::string name) const;

 private:
  static std::string cell(double x) { return number(x); }
  static std::string cell(int x) { return std::to_string(x); }
  static std::string cell(std::size_t x) { return std::to_string(x); }
  static std::string cell(bool x) { return x ? "true" : "false"; }
  static std::string cell(const std::string& s);
  static std::string cell(const char* s) { return cell(std::string(s)); }
  void add(std::vector<std::string> cells);

  std::size_t width_;
  std::string text_;
};

}  // namespace eaglass::harness::detail

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "ebib/experiments.hpp"
#include "ebib/io.hpp"

namespace ebib::experiments::detail {

/// Experiment parameters merged over a schema of defaults. Keys absent from the schema, or
/// values whose JSON type differs from the default's, are validation errors.
class Params {
 public:
  Params(const nlohmann::json& defaults, const nlohmann::json& given, const std::string& experiment);

  double num(const std::string& key) const;
  int integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::string str(const std::string& key) const;
  std::vector<double> vec(const std::string& key) const;
  std::vector<int> ints(const std::string& key) const;
  const nlohmann::json& merged() const { return merged_; }

 private:
  const nlohmann::json& at(const std::string& key) const;
  nlohmann::json merged_;
  std::string experiment_;
};

struct Outcome {
  std::vector<io::ResultTable> tables;
  std::vector<Check> checks;
  nlohmann::json stats = nlohmann::json::object();
};

struct Context {
  const ExperimentConfig& config;
  const Params& params;
  int threads = 1;
  std::string chain_dir;  // empty unless chains are dumped
};

struct Definition {
  std::string name;
  std::string description;
  nlohmann::json defaults;
  std::function<Outcome(const Context&)> run;
};

const std::vector<Definition>& registry();
const Definition& find(const std::string& name);

// Definitions contributed by each translation unit.
std::vector<Definition> normal_mean_experiments();
std::vector<Definition> regression_experiments();
std::vector<Definition> mixture_experiments();

/// Seed of replication `rep` for sample size n.
std::uint64_t rep_seed(const ExperimentConfig& c, int rep, std::int64_t n);

/// Runs f(0..count-1) on up to `threads` workers. The first exception is rethrown after join.
template <class F>
void parallel_for(int count, int threads, F&& f) {
  const int workers = std::max(1, std::min(threads, count));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex m;
  auto work = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(m);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

double median(std::vector<double> v);

bool strictly_decreasing(const std::vector<double>& v);
bool non_increasing(const std::vector<double>& v);

Check check(std::string name, bool passed, double value, std::string detail = {});

io::ResultTable table(std::string name, std::vector<std::string> columns);

}  // namespace ebib::experiments::detail

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace poisnet {

using Count = std::int64_t;

/// n variables by t samples of nonnegative event counts, stored row-major.
/// Each row is one variable; labels default to "1", "2", ... when absent.
class CountMatrix {
 public:
  CountMatrix() = default;
  CountMatrix(std::size_t n, std::size_t t);
  CountMatrix(std::size_t n, std::size_t t, std::vector<Count> values,
              std::vector<std::string> labels = {});

  static CountMatrix from_rows(const std::vector<std::vector<Count>>& rows,
                               std::vector<std::string> labels = {});

  std::size_t variables() const { return n_; }
  std::size_t samples() const { return t_; }

  Count operator()(std::size_t i, std::size_t s) const { return values_[i * t_ + s]; }
  void set(std::size_t i, std::size_t s, Count v);
  void add(std::size_t i, std::size_t s, Count v);

  std::span<const Count> row(std::size_t i) const {
    return {values_.data() + i * t_, t_};
  }

  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(std::size_t i) const { return labels_[i]; }
  void set_labels(std::vector<std::string> labels);

  /// Rows in the given order (labels follow their rows).
  CountMatrix select_rows(std::span<const std::size_t> rows) const;

  bool operator==(const CountMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::size_t t_ = 0;
  std::vector<Count> values_;
  std::vector<std::string> labels_;
};

}  // namespace poisnet

// Copyright 2026 The ShiftScope Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "shiftscope/common.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace shiftscope {

int infer_num_classes(std::span<const int> labels) {
  int num_classes = 0;
  for (int label : labels) {
    if (label < 1) {
      throw InvalidArgument("class labels must be >= 1, got " +
                            std::to_string(label));
    }
    num_classes = std::max(num_classes, label);
  }
  return num_classes;
}

void check_labels(std::span<const int> labels, int num_classes) {
  for (int label : labels) {
    if (label < 1 || label > num_classes) {
      throw InvalidArgument("label " + std::to_string(label) +
                            " outside [1, " + std::to_string(num_classes) +
                            "]");
    }
  }
}

Matrix softmax_rows(const Matrix& logits, double temperature) {
  Matrix probs(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const RowVector scaled = logits.row(i) / temperature;
    const double top = scaled.maxCoeff();
    const RowVector e = (scaled.array() - top).exp().matrix();
    probs.row(i) = e / e.sum();
  }
  return probs;
}

double log_sum_exp(const Eigen::Ref<const RowVector>& values) {
  const double top = values.maxCoeff();
  return top + std::log((values.array() - top).exp().sum());
}

int max_threads() {
  if (const char* env = std::getenv("SHIFTSCOPE_THREADS")) {
    const int requested = std::atoi(env);
    if (requested > 0) return requested;
  }
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace shiftscope

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

// Versioned text container for fitted parameters. The byte layout is
// documented in docs/formats.md.

#ifndef SHIFTSCOPE_CONTAINER_H_
#define SHIFTSCOPE_CONTAINER_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "shiftscope/common.h"
#include "shiftscope/net.h"
#include "shiftscope/scorers.h"

namespace shiftscope {

inline constexpr int kContainerVersion = 1;

struct ContainerBlock {
  std::string name;
  Matrix values;  // vectors are stored as n x 1
};

struct Container {
  std::string kind;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::pair<std::string, std::vector<std::int64_t>>> ints;
  std::vector<ContainerBlock> blocks;

  const std::string& meta_value(const std::string& key) const;
  const std::vector<std::int64_t>& int_list(const std::string& key) const;
  const Matrix& block(const std::string& name) const;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_container(const Container& container, std::ostream& out);
Container read_container(std::istream& in);

Container to_container(const DenseNet& net);
DenseNet net_from_container(const Container& container);
Container to_container(const MahalanobisModel& model);
MahalanobisModel mahalanobis_from_container(const Container& container);
Container to_container(const GramBounds& bounds);
GramBounds gram_from_container(const Container& container);

void save_net(const DenseNet& net, const std::filesystem::path& path);
DenseNet load_net(const std::filesystem::path& path);

}  // namespace shiftscope

#endif  // SHIFTSCOPE_CONTAINER_H_

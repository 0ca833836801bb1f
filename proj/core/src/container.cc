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

#include "shiftscope/container.h"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace shiftscope {
namespace {

constexpr const char* kMagic = "shiftscope-container";

std::string format_value(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value,
                                    std::chars_format::general, 17);
  return std::string(buffer, result.ptr);
}

template <typename T>
T parse_token(const std::string& token, std::size_t line_no) {
  T value{};
  const auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw FormatError("line " + std::to_string(line_no) +
                      ": cannot parse '" + token + "'");
  }
  return value;
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::vector<std::string> next() {
    std::string line;
    if (!std::getline(in_, line)) {
      throw FormatError("unexpected end of container after line " +
                        std::to_string(line_no_));
    }
    ++line_no_;
    std::istringstream tokens(line);
    std::vector<std::string> out;
    for (std::string t; tokens >> t;) out.push_back(t);
    return out;
  }

  std::size_t line() const { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

void expect(bool condition, const LineReader& reader, const std::string& what) {
  if (!condition) {
    throw FormatError("line " + std::to_string(reader.line()) + ": " + what);
  }
}

std::string block_name(const std::string& prefix, std::size_t a) {
  return prefix + std::to_string(a);
}

Matrix as_column(const Vector& v) { return v; }

}  // namespace

const std::string& Container::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta) {
    if (k == key) return v;
  }
  throw FormatError("missing meta entry '" + key + "'");
}

const std::vector<std::int64_t>& Container::int_list(const std::string& key) const {
  for (const auto& [k, v] : ints) {
    if (k == key) return v;
  }
  throw FormatError("missing int list '" + key + "'");
}

const Matrix& Container::block(const std::string& name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return b.values;
  }
  throw FormatError("missing block '" + name + "'");
}

void write_container(const Container& container, std::ostream& out) {
  out << kMagic << ' ' << kContainerVersion << '\n';
  out << "kind " << container.kind << '\n';
  for (const auto& [key, value] : container.meta) {
    out << "meta " << key << ' ' << value << '\n';
  }
  for (const auto& [key, values] : container.ints) {
    out << "ints " << key << ' ' << values.size();
    for (std::int64_t v : values) out << ' ' << v;
    out << '\n';
  }
  for (const auto& block : container.blocks) {
    out << "block " << block.name << ' ' << block.values.rows() << ' '
        << block.values.cols() << '\n';
    for (Eigen::Index i = 0; i < block.values.rows(); ++i) {
      for (Eigen::Index j = 0; j < block.values.cols(); ++j) {
        if (j > 0) out << ' ';
        out << format_value(block.values(i, j));
      }
      out << '\n';
    }
  }
  out << "end\n";
}

Container read_container(std::istream& in) {
  LineReader reader(in);
  Container c;
  auto tokens = reader.next();
  expect(tokens.size() == 2 && tokens[0] == kMagic, reader,
         "not a shiftscope container");
  const int version = parse_token<int>(tokens[1], reader.line());
  expect(version == kContainerVersion, reader,
         "unsupported container version " + tokens[1]);
  tokens = reader.next();
  expect(tokens.size() == 2 && tokens[0] == "kind", reader, "expected 'kind'");
  c.kind = tokens[1];
  while (true) {
    tokens = reader.next();
    expect(!tokens.empty(), reader, "blank line");
    if (tokens[0] == "end") break;
    if (tokens[0] == "meta") {
      expect(tokens.size() == 3, reader, "meta needs a key and a value");
      c.meta.emplace_back(tokens[1], tokens[2]);
    } else if (tokens[0] == "ints") {
      expect(tokens.size() >= 3, reader, "ints needs a key and a count");
      const auto count = parse_token<std::size_t>(tokens[2], reader.line());
      expect(tokens.size() == 3 + count, reader, "ints count mismatch");
      std::vector<std::int64_t> values;
      for (std::size_t i = 0; i < count; ++i) {
        values.push_back(parse_token<std::int64_t>(tokens[3 + i], reader.line()));
      }
      c.ints.emplace_back(tokens[1], std::move(values));
    } else if (tokens[0] == "block") {
      expect(tokens.size() == 4, reader, "block needs a name, rows and cols");
      const auto rows = parse_token<Eigen::Index>(tokens[2], reader.line());
      const auto cols = parse_token<Eigen::Index>(tokens[3], reader.line());
      expect(rows >= 0 && cols >= 0, reader, "negative block shape");
      ContainerBlock block{tokens[1], Matrix(rows, cols)};
      for (Eigen::Index i = 0; i < rows; ++i) {
        const auto row = reader.next();
        expect(static_cast<Eigen::Index>(row.size()) == cols, reader,
               "block row has the wrong number of values");
        for (Eigen::Index j = 0; j < cols; ++j) {
          block.values(i, j) = parse_token<double>(row[j], reader.line());
        }
      }
      c.blocks.push_back(std::move(block));
    } else {
      expect(false, reader, "unknown record '" + tokens[0] + "'");
    }
  }
  return c;
}

Container to_container(const DenseNet& net) {
  net.validate();
  Container c;
  c.kind = "dense_net";
  c.meta.emplace_back("activation", activation_name(net.activation));
  c.meta.emplace_back("seed", std::to_string(net.seed));
  c.ints.emplace_back("layer_sizes", std::vector<std::int64_t>(
                                         net.layer_sizes.begin(), net.layer_sizes.end()));
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    c.blocks.push_back({block_name("W", l), net.weights[l]});
    c.blocks.push_back({block_name("b", l), as_column(net.biases[l])});
  }
  return c;
}

DenseNet net_from_container(const Container& c) {
  if (c.kind != "dense_net") throw FormatError("container is not a dense_net");
  DenseNet net;
  net.activation = parse_activation(c.meta_value("activation"));
  net.seed = parse_token<std::uint64_t>(c.meta_value("seed"), 0);
  for (std::int64_t s : c.int_list("layer_sizes")) {
    net.layer_sizes.push_back(static_cast<int>(s));
  }
  if (net.layer_sizes.size() < 2) throw FormatError("too few layers");
  for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
    net.weights.push_back(c.block(block_name("W", l)));
    const Matrix& b = c.block(block_name("b", l));
    if (b.cols() != 1) throw FormatError("bias block must be a column");
    net.biases.push_back(b.col(0));
  }
  try {
    net.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("inconsistent net: ") + e.what());
  }
  return net;
}

Container to_container(const MahalanobisModel& model) {
  Container c;
  c.kind = "mahalanobis";
  std::vector<std::int64_t> layers;
  for (const auto& l : model.layers) layers.push_back(l.layer);
  c.ints.emplace_back("layers", layers);
  c.ints.emplace_back("num_classes",
                      std::vector<std::int64_t>{model.num_classes()});
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& layer = model.layers[i];
    Matrix means(layer.precision.rows(), layer.class_means.size());
    for (std::size_t k = 0; k < layer.class_means.size(); ++k) {
      means.col(k) = layer.class_means[k];
    }
    c.blocks.push_back({block_name("means", i), means});
    c.blocks.push_back({block_name("precision", i), layer.precision});
    Matrix scalars(2, 1);
    scalars << layer.weight, layer.ridge;
    c.blocks.push_back({block_name("weight_ridge", i), scalars});
  }
  return c;
}

MahalanobisModel mahalanobis_from_container(const Container& c) {
  if (c.kind != "mahalanobis") throw FormatError("container is not a mahalanobis model");
  MahalanobisModel model;
  const auto& layers = c.int_list("layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    MahalanobisLayer layer;
    layer.layer = static_cast<int>(layers[i]);
    const Matrix& means = c.block(block_name("means", i));
    for (Eigen::Index k = 0; k < means.cols(); ++k) layer.class_means.push_back(means.col(k));
    layer.precision = c.block(block_name("precision", i));
    const Matrix& scalars = c.block(block_name("weight_ridge", i));
    if (scalars.size() != 2) throw FormatError("bad weight_ridge block");
    layer.weight = scalars(0, 0);
    layer.ridge = scalars(1, 0);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

Container to_container(const GramBounds& bounds) {
  Container c;
  c.kind = "gram_bounds";
  c.ints.emplace_back("layers", std::vector<std::int64_t>(bounds.layers.begin(),
                                                          bounds.layers.end()));
  c.ints.emplace_back("orders", std::vector<std::int64_t>(bounds.orders.begin(),
                                                          bounds.orders.end()));
  c.ints.emplace_back("num_classes",
                      std::vector<std::int64_t>{bounds.num_classes()});
  for (int k = 0; k < bounds.num_classes(); ++k) {
    for (std::size_t l = 0; l < bounds.layers.size(); ++l) {
      for (std::size_t o = 0; o < bounds.orders.size(); ++o) {
        const std::string suffix = std::to_string(k) + "_" + std::to_string(l) +
                                   "_" + std::to_string(o);
        Matrix mm(bounds.mins[k][l][o].size(), 2);
        mm.col(0) = bounds.mins[k][l][o];
        mm.col(1) = bounds.maxs[k][l][o];
        c.blocks.push_back({"minmax_" + suffix, mm});
      }
    }
  }
  return c;
}

GramBounds gram_from_container(const Container& c) {
  if (c.kind != "gram_bounds") throw FormatError("container is not gram bounds");
  GramBounds bounds;
  for (auto v : c.int_list("layers")) bounds.layers.push_back(static_cast<int>(v));
  for (auto v : c.int_list("orders")) bounds.orders.push_back(static_cast<int>(v));
  const auto& nc = c.int_list("num_classes");
  if (nc.size() != 1 || nc[0] < 1) throw FormatError("bad num_classes");
  const int num_classes = static_cast<int>(nc[0]);
  bounds.mins.resize(num_classes);
  bounds.maxs.resize(num_classes);
  for (int k = 0; k < num_classes; ++k) {
    bounds.mins[k].resize(bounds.layers.size());
    bounds.maxs[k].resize(bounds.layers.size());
    for (std::size_t l = 0; l < bounds.layers.size(); ++l) {
      for (std::size_t o = 0; o < bounds.orders.size(); ++o) {
        const std::string suffix = std::to_string(k) + "_" + std::to_string(l) +
                                   "_" + std::to_string(o);
        const Matrix& mm = c.block("minmax_" + suffix);
        if (mm.cols() != 2) throw FormatError("bad gram bounds block");
        bounds.mins[k][l].push_back(mm.col(0));
        bounds.maxs[k][l].push_back(mm.col(1));
      }
    }
  }
  return bounds;
}

void save_net(const DenseNet& net, const std::filesystem::path& path) {
  std::ostringstream out;
  write_container(to_container(net), out);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot write '" + path.string() + "'");
  file << out.str();
  if (!file) throw std::runtime_error("write failed for '" + path.string() + "'");
}

DenseNet load_net(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw std::runtime_error("cannot open '" + path.string() + "'");
  return net_from_container(read_container(file));
}

}  // namespace shiftscope

// Copyright 2026 The kgpoison Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kgpoison/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace kgp {
namespace {

constexpr char kMagic[8] = {'K', 'G', 'P', 'C', 'K', 'P', 'T', '1'};

static_assert(std::endian::native == std::endian::little, "checkpoint format is little-endian");

void append_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

void append_matrix(std::string& out, const Matrix& m) {
  out.append(reinterpret_cast<const char*>(m.data()), sizeof(double) * m.size());
}

nlohmann::json shape(const Matrix& m) { return {m.rows(), m.cols()}; }

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  const EmbeddingModel& m = ckpt.model;
  nlohmann::json header = {
      {"format", "kgpoison-checkpoint"},
      {"version", 1},
      {"kind", to_string(m.kind)},
      {"k", m.k},
      {"seed", m.seed},
      {"num_entities", m.num_entities()},
      {"num_relations", m.num_relations()},
      {"dim", m.dim()},
      {"config_hash", ckpt.config_hash},
      {"epochs_completed", ckpt.epochs_completed},
  };
  if (ckpt.optimizer) {
    nlohmann::json slots = nlohmann::json::array();
    for (const auto& s : ckpt.optimizer->slots) slots.push_back(shape(s));
    header["optimizer"] = {{"kind", ckpt.optimizer->kind},
                           {"step", ckpt.optimizer->step},
                           {"slots", slots}};
  }
  const std::string text = header.dump();
  std::string out(kMagic, sizeof(kMagic));
  append_u64(out, text.size());
  out += text;
  append_matrix(out, m.entity);
  append_matrix(out, m.relation);
  if (ckpt.optimizer) {
    for (const auto& s : ckpt.optimizer->slots) append_matrix(out, s);
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw DataError("not a kgpoison checkpoint");
  }
  std::uint64_t header_len;
  std::memcpy(&header_len, bytes.data() + 8, 8);
  if (16 + header_len > bytes.size()) throw DataError("truncated checkpoint header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(16, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("corrupt checkpoint header: ") + e.what());
  }
  std::size_t offset = 16 + header_len;
  auto read_matrix = [&](Eigen::Index rows, Eigen::Index cols) {
    const std::size_t n = sizeof(double) * static_cast<std::size_t>(rows * cols);
    if (offset + n > bytes.size()) throw DataError("truncated checkpoint payload");
    Matrix m(rows, cols);
    std::memcpy(m.data(), bytes.data() + offset, n);
    offset += n;
    return m;
  };
  Checkpoint ckpt;
  try {
    EmbeddingModel& m = ckpt.model;
    m.kind = parse_model_kind(header.at("kind").get<std::string>());
    m.k = header.at("k").get<int>();
    m.seed = header.at("seed").get<std::uint64_t>();
    const auto ne = header.at("num_entities").get<Eigen::Index>();
    const auto nr = header.at("num_relations").get<Eigen::Index>();
    const auto dim = header.at("dim").get<Eigen::Index>();
    m.entity = read_matrix(ne, dim);
    m.relation = read_matrix(nr, dim);
    ckpt.config_hash = header.at("config_hash").get<std::string>();
    ckpt.epochs_completed = header.at("epochs_completed").get<int>();
    if (header.contains("optimizer")) {
      OptimizerState st;
      st.kind = header["optimizer"].at("kind").get<std::string>();
      st.step = header["optimizer"].at("step").get<std::int64_t>();
      for (const auto& s : header["optimizer"].at("slots")) {
        st.slots.push_back(read_matrix(s.at(0).get<Eigen::Index>(), s.at(1).get<Eigen::Index>()));
      }
      ckpt.optimizer = std::move(st);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("corrupt checkpoint header: ") + e.what());
  }
  if (offset != bytes.size()) throw DataError("trailing bytes in checkpoint");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  const std::string bytes = serialize_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

std::string checkpoint_hash(const Checkpoint& ckpt) {
  return hex64(fnv1a64(serialize_checkpoint(ckpt)));
}

void check_compatible(const Checkpoint& ckpt, const KnowledgeGraph& kg) {
  if (ckpt.model.num_entities() != kg.num_entities() ||
      ckpt.model.num_relations() != kg.num_relations()) {
    throw DataError("checkpoint vocabulary (" + std::to_string(ckpt.model.num_entities()) + " entities, " +
                    std::to_string(ckpt.model.num_relations()) + " relations) does not match dataset (" +
                    std::to_string(kg.num_entities()) + ", " + std::to_string(kg.num_relations()) + ")");
  }
}

}  // namespace kgp

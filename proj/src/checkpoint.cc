// Copyright 2026 The ds2ta-desk Authors
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


#include "ds2ta/checkpoint.h"

#include <limits>

#include "ds2ta/binary_io.h"
#include "ds2ta/config_text.h"

namespace ds2ta {

const CheckpointRecord* CheckpointData::Find(std::string_view name) const {
  for (const auto& r : records) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

void CheckpointData::Add(CheckpointRecord r) {
  if (Find(r.name)) throw FormatError("duplicate checkpoint record '" + r.name + "'", 0);
  records.push_back(std::move(r));
}

std::vector<unsigned char> EncodeCheckpoint(const CheckpointData& ck) {
  ByteWriter w;
  w.PutBytes(std::string_view("DS2T"));
  w.Put<std::uint32_t>(kCheckpointVersion);
  w.Put<std::uint32_t>(static_cast<std::uint32_t>(ck.config_text.size()));
  w.PutBytes(ck.config_text);
  for (const auto& r : ck.records) {
    if (r.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw FormatError("record name too long: " + r.name, w.size());
    }
    w.Put<std::uint16_t>(static_cast<std::uint16_t>(r.name.size()));
    w.PutBytes(r.name);
    w.Put<std::uint8_t>(static_cast<std::uint8_t>(r.dtype()));
    w.Put<std::uint8_t>(static_cast<std::uint8_t>(r.shape.size()));
    for (const auto d : r.shape) w.Put<std::uint32_t>(static_cast<std::uint32_t>(d));
    std::visit(
        [&](const auto& v) {
          if (static_cast<std::int64_t>(v.size()) != NumElements(r.shape)) {
            throw FormatError("record '" + r.name + "' payload does not match its shape",
                              w.size());
          }
          for (const auto x : v) w.Put(x);
        },
        r.data);
  }
  return w.bytes();
}

namespace {

template <typename T>
std::vector<T> ReadPayload(ByteReader& rd, std::int64_t n) {
  rd.Need(static_cast<std::size_t>(n) * sizeof(T), "tensor payload");
  std::vector<T> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = rd.Get<T>("tensor payload");
  return v;
}

}  // namespace

CheckpointData DecodeCheckpoint(const std::vector<unsigned char>& bytes) {
  ByteReader rd(bytes);
  if (rd.GetString(4, "magic") != "DS2T") throw FormatError("bad checkpoint magic", 0);
  const std::size_t version_at = rd.pos();
  const auto version = rd.Get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw UnsupportedVersionError("unsupported checkpoint version " + std::to_string(version),
                                  version_at);
  }
  CheckpointData ck;
  const auto config_len = rd.Get<std::uint32_t>("config length");
  ck.config_text = rd.GetString(config_len, "config text");
  while (!rd.done()) {
    const std::size_t at = rd.pos();
    CheckpointRecord r;
    const auto name_len = rd.Get<std::uint16_t>("record name length");
    r.name = rd.GetString(name_len, "record name");
    const std::size_t dtype_at = rd.pos();
    const auto dtype = rd.Get<std::uint8_t>("dtype");
    const std::size_t rank_at = rd.pos();
    const auto rank = rd.Get<std::uint8_t>("rank");
    if (rank > kMaxRank) throw FormatError("record rank " + std::to_string(rank) + " too large", rank_at);
    std::int64_t n = 1;
    for (int i = 0; i < rank; ++i) {
      const std::size_t dim_at = rd.pos();
      const auto d = rd.Get<std::uint32_t>("dimension");
      if (d == 0) throw FormatError("zero extent in record '" + r.name + "'", dim_at);
      r.shape.push_back(d);
      n *= d;
      if (n > static_cast<std::int64_t>(bytes.size())) {
        throw FormatError("record '" + r.name + "' larger than the file", dim_at);
      }
    }
    switch (static_cast<DType>(dtype)) {
      case DType::kF32: r.data = ReadPayload<float>(rd, n); break;
      case DType::kF64: r.data = ReadPayload<double>(rd, n); break;
      case DType::kI32: r.data = ReadPayload<std::int32_t>(rd, n); break;
      case DType::kU64: r.data = ReadPayload<std::uint64_t>(rd, n); break;
      default: throw FormatError("unknown dtype code " + std::to_string(dtype), dtype_at);
    }
    if (ck.Find(r.name)) throw FormatError("duplicate record '" + r.name + "'", at);
    ck.records.push_back(std::move(r));
  }
  return ck;
}

void WriteCheckpoint(const std::string& path, const CheckpointData& ck) {
  WriteFileAtomic(path, EncodeCheckpoint(ck));
}

CheckpointData ReadCheckpoint(const std::string& path) {
  return DecodeCheckpoint(ReadFileBytes(path));
}

template <typename Real>
CheckpointRecord TensorRecord(std::string name, const Tensor<Real>& t) {
  CheckpointRecord r;
  r.name = std::move(name);
  r.shape = t.shape();
  r.data = std::vector<Real>(t.data().begin(), t.data().end());
  return r;
}

template <typename Real>
Tensor<Real> RecordTensor(const CheckpointRecord& r) {
  const auto* v = std::get_if<std::vector<Real>>(&r.data);
  if (!v) throw FormatError("record '" + r.name + "' has an unexpected dtype", 0);
  Tensor<Real> t(r.shape);
  std::copy(v->begin(), v->end(), t.raw());
  return t;
}

namespace {

std::string TableName(int l, int h) {
  return "table.block" + std::to_string(l) + ".head" + std::to_string(h);
}

}  // namespace

template <typename Real>
CheckpointData ModelCheckpoint(const Model<Real>& model) {
  CheckpointData ck;
  ck.config_text = model.config().ToText().Serialize();
  for (const auto& p : model.parameters()) ck.Add(TensorRecord(p.name, p.value));
  const auto& tables = model.tables();
  for (int l = 0; l < static_cast<int>(tables.size()); ++l) {
    for (int h = 0; h < static_cast<int>(tables[l].size()); ++h) {
      CheckpointRecord r;
      r.name = TableName(l, h);
      r.shape = {static_cast<std::int64_t>(tables[l][h].size())};
      r.data = tables[l][h];
      ck.Add(std::move(r));
    }
  }
  return ck;
}

template <typename Real>
Model<Real> LoadModel(const CheckpointData& ck) {
  ModelConfig cfg;
  try {
    cfg = ModelConfig::FromText(KeyValueText::Parse(ck.config_text));
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what(), 12);
  }
  Model<Real> model(cfg);
  for (auto& p : model.parameters()) {
    const CheckpointRecord* r = ck.Find(p.name);
    if (!r) throw FormatError("checkpoint lacks parameter '" + p.name + "'", 0);
    if (r->shape != p.value.shape()) {
      throw FormatError("parameter '" + p.name + "' has shape " + ShapeString(r->shape) +
                        ", expected " + ShapeString(p.value.shape()), 0);
    }
    p.value = RecordTensor<Real>(*r);
  }
  model.RebuildTables();
  const auto& tables = model.tables();
  for (int l = 0; l < static_cast<int>(tables.size()); ++l) {
    for (int h = 0; h < static_cast<int>(tables[l].size()); ++h) {
      const CheckpointRecord* r = ck.Find(TableName(l, h));
      if (!r) continue;
      const auto* stored = std::get_if<std::vector<std::int32_t>>(&r->data);
      if (!stored || *stored != tables[l][h]) {
        throw FormatError("stored table '" + r->name + "' disagrees with its parameters", 0);
      }
    }
  }
  return model;
}

template CheckpointRecord TensorRecord<float>(std::string, const Tensor<float>&);
template CheckpointRecord TensorRecord<double>(std::string, const Tensor<double>&);
template Tensor<float> RecordTensor<float>(const CheckpointRecord&);
template Tensor<double> RecordTensor<double>(const CheckpointRecord&);
template CheckpointData ModelCheckpoint<float>(const Model<float>&);
template CheckpointData ModelCheckpoint<double>(const Model<double>&);
template Model<float> LoadModel<float>(const CheckpointData&);
template Model<double> LoadModel<double>(const CheckpointData&);

}  // namespace ds2ta

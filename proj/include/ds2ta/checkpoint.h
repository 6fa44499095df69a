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


// Named-tensor checkpoint container.
//
// Layout (little endian):
//   "DS2T"  u32 version=1  u32 config_len  config text (key = value lines)
//   then records until end of file:
//   u16 name_len  name  u8 dtype  u8 rank  u32 dims[rank]  payload
// dtype codes: 1 = f32, 2 = f64, 3 = i32, 4 = u64.

#ifndef DS2TA_CHECKPOINT_H_
#define DS2TA_CHECKPOINT_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ds2ta/model.h"
#include "ds2ta/tensor.h"

namespace ds2ta {

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class DType : std::uint8_t { kF32 = 1, kF64 = 2, kI32 = 3, kU64 = 4 };

struct CheckpointRecord {
  std::string name;
  Shape shape;
  std::variant<std::vector<float>, std::vector<double>, std::vector<std::int32_t>,
               std::vector<std::uint64_t>>
      data;

  DType dtype() const { return static_cast<DType>(data.index() + 1); }
};

struct CheckpointData {
  std::string config_text;
  std::vector<CheckpointRecord> records;

  const CheckpointRecord* Find(std::string_view name) const;
  void Add(CheckpointRecord r);
};

std::vector<unsigned char> EncodeCheckpoint(const CheckpointData& ck);
CheckpointData DecodeCheckpoint(const std::vector<unsigned char>& bytes);

void WriteCheckpoint(const std::string& path, const CheckpointData& ck);
CheckpointData ReadCheckpoint(const std::string& path);

// Model config, every parameter under its own name, and the NSAD tables as
// "table.block{l}.head{h}".
template <typename Real>
CheckpointData ModelCheckpoint(const Model<Real>& model);

// Rebuilds a model from a checkpoint. Missing or mis-shaped parameters and
// stored tables that disagree with the parameters are format errors.
template <typename Real>
Model<Real> LoadModel(const CheckpointData& ck);

template <typename Real>
CheckpointRecord TensorRecord(std::string name, const Tensor<Real>& t);
template <typename Real>
Tensor<Real> RecordTensor(const CheckpointRecord& r);

}  // namespace ds2ta

#endif  // DS2TA_CHECKPOINT_H_

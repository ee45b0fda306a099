// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "copilot/common/error.hpp"

namespace copilot::data {

/// Binary tensor container shared by dataset shards and model checkpoints.
///
///   data.bin := "CPLT" u32 version { u8 dtype, u8 ndim, u32 dims[ndim],
///                                    payload }*
///
/// All integers and payloads are little-endian. The companion manifest.json
/// records each tensor's name, offsets and CRC32C.
inline constexpr char kMagic[4] = {'C', 'P', 'L', 'T'};
inline constexpr std::uint32_t kFormatVersion = 1;

enum class DType : std::uint8_t { kF32 = 0, kU8 = 1, kBool = 2 };

std::size_t dtype_size(DType dtype);
std::string_view dtype_name(DType dtype);

enum class ShardErrorCode {
  kIo,
  kBadMagic,
  kVersionMismatch,
  kTruncated,
  kChecksumMismatch,
  kSchema,
};

std::string_view shard_error_name(ShardErrorCode code);

class ShardError : public Error {
 public:
  ShardError(ShardErrorCode code, const std::string& what)
      : Error(std::string(shard_error_name(code)) + ": " + what), code_(code) {}
  ShardErrorCode code() const { return code_; }

 private:
  ShardErrorCode code_;
};

struct Tensor {
  DType dtype = DType::kF32;
  std::vector<std::uint32_t> dims;
  std::vector<std::byte> bytes;

  std::size_t numel() const;

  static Tensor f32(std::vector<std::uint32_t> dims, std::span<const float> v);
  static Tensor u8(std::vector<std::uint32_t> dims,
                   std::span<const std::uint8_t> v);
  static Tensor boolean(std::vector<std::uint32_t> dims,
                        std::span<const std::uint8_t> v);

  std::vector<float> to_f32() const;
  std::vector<std::uint8_t> to_u8() const;
};

/// Where a tensor lives inside data.bin.
struct TensorRecord {
  std::string name;
  DType dtype = DType::kF32;
  std::vector<std::uint32_t> dims;
  std::uint64_t offset = 0;          // start of the tensor header
  std::uint64_t payload_offset = 0;  // start of the raw payload
  std::uint64_t nbytes = 0;
  std::uint32_t crc32c = 0;
};

nlohmann::json record_to_json(const TensorRecord& rec);
TensorRecord record_from_json(const nlohmann::json& doc);

/// Castagnoli CRC over `data`.
std::uint32_t crc32c(std::span<const std::byte> data);

/// Streams tensors into a data.bin file.
class ContainerWriter {
 public:
  explicit ContainerWriter(const std::filesystem::path& path);
  TensorRecord append(const std::string& name, const Tensor& tensor);
  /// Flushes and closes; throws ShardError(kIo) on failure.
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::uint64_t offset_ = 0;
};

/// Random-access reader validating magic, version, headers and checksums.
class ContainerReader {
 public:
  explicit ContainerReader(const std::filesystem::path& path);
  Tensor read(const TensorRecord& rec);
  std::uint64_t size() const { return size_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::uint64_t size_ = 0;
};

}  // namespace copilot::data

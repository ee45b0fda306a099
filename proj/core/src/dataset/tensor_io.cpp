// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#include "copilot/dataset/tensor_io.hpp"

#include <bit>
#include <cstring>

#include <boost/crc.hpp>
#include <nlohmann/json.hpp>

namespace copilot::data {

static_assert(std::endian::native == std::endian::little,
              "payloads are written in host order, which must be little-endian");

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::kF32:
      return 4;
    case DType::kU8:
    case DType::kBool:
      return 1;
  }
  throw ShardError(ShardErrorCode::kSchema, "unknown dtype");
}

std::string_view dtype_name(DType dtype) {
  switch (dtype) {
    case DType::kF32:
      return "f32";
    case DType::kU8:
      return "u8";
    case DType::kBool:
      return "bool";
  }
  return "unknown";
}

std::string_view shard_error_name(ShardErrorCode code) {
  switch (code) {
    case ShardErrorCode::kIo:
      return "io_error";
    case ShardErrorCode::kBadMagic:
      return "bad_magic";
    case ShardErrorCode::kVersionMismatch:
      return "version_mismatch";
    case ShardErrorCode::kTruncated:
      return "truncated";
    case ShardErrorCode::kChecksumMismatch:
      return "checksum_mismatch";
    case ShardErrorCode::kSchema:
      return "schema_error";
  }
  return "unknown";
}

std::size_t Tensor::numel() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

namespace {

template <typename T>
Tensor make_tensor(DType dtype, std::vector<std::uint32_t> dims,
                   std::span<const T> values) {
  Tensor t;
  t.dtype = dtype;
  t.dims = std::move(dims);
  if (t.numel() != values.size()) {
    throw ContractViolation("tensor dims do not match value count");
  }
  t.bytes.resize(values.size_bytes());
  if (!values.empty()) std::memcpy(t.bytes.data(), values.data(), t.bytes.size());
  return t;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(const unsigned char* b) {
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

Tensor Tensor::f32(std::vector<std::uint32_t> dims, std::span<const float> v) {
  return make_tensor(DType::kF32, std::move(dims), v);
}

Tensor Tensor::u8(std::vector<std::uint32_t> dims,
                  std::span<const std::uint8_t> v) {
  return make_tensor(DType::kU8, std::move(dims), v);
}

Tensor Tensor::boolean(std::vector<std::uint32_t> dims,
                       std::span<const std::uint8_t> v) {
  Tensor t = make_tensor(DType::kBool, std::move(dims), v);
  for (auto& b : t.bytes) b = std::byte{b != std::byte{0}};
  return t;
}

std::vector<float> Tensor::to_f32() const {
  if (dtype != DType::kF32) {
    throw ShardError(ShardErrorCode::kSchema, "tensor is not f32");
  }
  std::vector<float> out(numel());
  if (!out.empty()) std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

std::vector<std::uint8_t> Tensor::to_u8() const {
  if (dtype == DType::kF32) {
    throw ShardError(ShardErrorCode::kSchema, "tensor is not u8/bool");
  }
  std::vector<std::uint8_t> out(numel());
  if (!out.empty()) std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

std::uint32_t crc32c(std::span<const std::byte> data) {
  boost::crc_optimal<32, 0x1EDC6F41, 0xFFFFFFFF, 0xFFFFFFFF, true, true> crc;
  crc.process_bytes(data.data(), data.size());
  return crc.checksum();
}

nlohmann::json record_to_json(const TensorRecord& rec) {
  return {
      {"name", rec.name},
      {"dtype", static_cast<int>(rec.dtype)},
      {"dims", rec.dims},
      {"offset", rec.offset},
      {"payload_offset", rec.payload_offset},
      {"nbytes", rec.nbytes},
      {"crc32c", rec.crc32c},
  };
}

TensorRecord record_from_json(const nlohmann::json& doc) {
  try {
    TensorRecord rec;
    rec.name = doc.at("name").get<std::string>();
    const int dtype = doc.at("dtype").get<int>();
    if (dtype < 0 || dtype > 2) {
      throw ShardError(ShardErrorCode::kSchema,
                       "unknown dtype code " + std::to_string(dtype));
    }
    rec.dtype = static_cast<DType>(dtype);
    rec.dims = doc.at("dims").get<std::vector<std::uint32_t>>();
    rec.offset = doc.at("offset").get<std::uint64_t>();
    rec.payload_offset = doc.at("payload_offset").get<std::uint64_t>();
    rec.nbytes = doc.at("nbytes").get<std::uint64_t>();
    rec.crc32c = doc.at("crc32c").get<std::uint32_t>();
    return rec;
  } catch (const nlohmann::json::exception& e) {
    throw ShardError(ShardErrorCode::kSchema,
                     std::string("bad tensor record: ") + e.what());
  }
}

ContainerWriter::ContainerWriter(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) {
    throw ShardError(ShardErrorCode::kIo, "cannot open " + path.string());
  }
  out_.write(kMagic, 4);
  put_u32(out_, kFormatVersion);
  offset_ = 8;
}

TensorRecord ContainerWriter::append(const std::string& name,
                                     const Tensor& tensor) {
  if (tensor.dims.size() > 255) {
    throw ContractViolation("tensor rank exceeds 255");
  }
  TensorRecord rec;
  rec.name = name;
  rec.dtype = tensor.dtype;
  rec.dims = tensor.dims;
  rec.offset = offset_;
  const char header[2] = {static_cast<char>(tensor.dtype),
                          static_cast<char>(tensor.dims.size())};
  out_.write(header, 2);
  for (auto d : tensor.dims) put_u32(out_, d);
  rec.payload_offset = offset_ + 2 + 4 * tensor.dims.size();
  rec.nbytes = tensor.bytes.size();
  rec.crc32c = crc32c(tensor.bytes);
  out_.write(reinterpret_cast<const char*>(tensor.bytes.data()),
             static_cast<std::streamsize>(tensor.bytes.size()));
  offset_ = rec.payload_offset + rec.nbytes;
  if (!out_) {
    throw ShardError(ShardErrorCode::kIo, "write failed: " + path_.string());
  }
  return rec;
}

void ContainerWriter::close() {
  out_.flush();
  out_.close();
  if (!out_) {
    throw ShardError(ShardErrorCode::kIo, "close failed: " + path_.string());
  }
}

ContainerReader::ContainerReader(const std::filesystem::path& path)
    : path_(path), in_(path, std::ios::binary) {
  if (!in_) {
    throw ShardError(ShardErrorCode::kIo, "cannot open " + path.string());
  }
  in_.seekg(0, std::ios::end);
  size_ = static_cast<std::uint64_t>(in_.tellg());
  in_.seekg(0);
  if (size_ < 8) {
    throw ShardError(ShardErrorCode::kTruncated,
                     path.string() + " is shorter than its header");
  }
  unsigned char header[8];
  in_.read(reinterpret_cast<char*>(header), 8);
  if (std::memcmp(header, kMagic, 4) != 0) {
    throw ShardError(ShardErrorCode::kBadMagic,
                     path.string() + " does not start with CPLT");
  }
  const std::uint32_t version = get_u32(header + 4);
  if (version != kFormatVersion) {
    throw ShardError(ShardErrorCode::kVersionMismatch,
                     path.string() + " has version " + std::to_string(version) +
                         ", expected " + std::to_string(kFormatVersion));
  }
}

Tensor ContainerReader::read(const TensorRecord& rec) {
  const std::uint64_t header_len = 2 + 4 * rec.dims.size();
  if (rec.offset + header_len > size_ || rec.payload_offset + rec.nbytes > size_) {
    throw ShardError(ShardErrorCode::kTruncated,
                     "tensor '" + rec.name + "' extends past the end of " +
                         path_.string());
  }
  std::vector<unsigned char> header(header_len);
  in_.seekg(static_cast<std::streamoff>(rec.offset));
  in_.read(reinterpret_cast<char*>(header.data()),
           static_cast<std::streamsize>(header_len));
  Tensor t;
  t.dtype = static_cast<DType>(header[0]);
  const std::size_t ndim = header[1];
  if (header[0] > 2 || ndim != rec.dims.size()) {
    throw ShardError(ShardErrorCode::kSchema,
                     "tensor '" + rec.name + "' header disagrees with manifest");
  }
  for (std::size_t i = 0; i < ndim; ++i) {
    t.dims.push_back(get_u32(header.data() + 2 + 4 * i));
  }
  if (t.dtype != rec.dtype || t.dims != rec.dims ||
      t.numel() * dtype_size(t.dtype) != rec.nbytes ||
      rec.payload_offset != rec.offset + header_len) {
    throw ShardError(ShardErrorCode::kSchema,
                     "tensor '" + rec.name + "' header disagrees with manifest");
  }
  t.bytes.resize(rec.nbytes);
  in_.read(reinterpret_cast<char*>(t.bytes.data()),
           static_cast<std::streamsize>(rec.nbytes));
  if (!in_) {
    throw ShardError(ShardErrorCode::kIo, "read failed: " + path_.string());
  }
  if (crc32c(t.bytes) != rec.crc32c) {
    throw ShardError(ShardErrorCode::kChecksumMismatch,
                     "tensor '" + rec.name + "' in " + path_.string());
  }
  return t;
}

}  // namespace copilot::data

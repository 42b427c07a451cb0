#include "qxfer/nifti.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "qxfer/error.hpp"

namespace qxfer {
namespace {

// Byte offsets of the NIfTI-1 header fields used here.
constexpr std::size_t kOffSizeofHdr = 0;
constexpr std::size_t kOffRegular = 38;
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffBitpix = 72;
constexpr std::size_t kOffPixdim = 76;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffSclInter = 116;
constexpr std::size_t kOffXyztUnits = 123;
constexpr std::size_t kOffDescrip = 148;
constexpr std::size_t kOffQformCode = 252;
constexpr std::size_t kOffSformCode = 254;
constexpr std::size_t kOffSrowX = 280;
constexpr std::size_t kOffMagic = 344;

constexpr std::size_t kDescripLength = 80;

template <typename T>
T byteswap_value(T value) {
  std::array<std::byte, sizeof(T)> raw;
  std::memcpy(raw.data(), &value, sizeof(T));
  std::reverse(raw.begin(), raw.end());
  std::memcpy(&value, raw.data(), sizeof(T));
  return value;
}

class Reader {
 public:
  Reader(std::span<const std::byte> bytes, bool swap) : bytes_(bytes), swap_(swap) {}

  template <typename T>
  T get(std::size_t offset) const {
    T value;
    std::memcpy(&value, bytes_.data() + offset, sizeof(T));
    return swap_ ? byteswap_value(value) : value;
  }

 private:
  std::span<const std::byte> bytes_;
  bool swap_;
};

// Files are written little-endian regardless of the host.
template <typename T>
void put(std::vector<std::byte>& out, std::size_t offset, T value) {
  if constexpr (std::endian::native == std::endian::big) value = byteswap_value(value);
  std::memcpy(out.data() + offset, &value, sizeof(T));
}

bool supported(std::int16_t code) {
  return code == static_cast<std::int16_t>(DataType::UInt8) ||
         code == static_cast<std::int16_t>(DataType::Float32) ||
         code == static_cast<std::int16_t>(DataType::Float64);
}

}  // namespace

NiftiImage read_nifti(std::span<const std::byte> bytes) {
  if (bytes.size() < kNiftiHeaderSize) throw DataError("NIfTI: file shorter than 348-byte header");

  std::int32_t sizeof_hdr;
  std::memcpy(&sizeof_hdr, bytes.data() + kOffSizeofHdr, sizeof sizeof_hdr);
  bool swap = false;
  if (sizeof_hdr != static_cast<std::int32_t>(kNiftiHeaderSize)) {
    if (byteswap_value(sizeof_hdr) != static_cast<std::int32_t>(kNiftiHeaderSize)) {
      throw DataError("NIfTI: sizeof_hdr is not 348");
    }
    swap = true;
  }
  const Reader r(bytes, swap);

  const char* magic = reinterpret_cast<const char*>(bytes.data() + kOffMagic);
  if (std::memcmp(magic, "n+1\0", 4) != 0) {
    if (std::memcmp(magic, "ni1\0", 4) == 0) {
      throw DataError("NIfTI: detached header/image pairs (ni1) are not supported");
    }
    throw DataError("NIfTI: bad magic");
  }

  const auto ndim = r.get<std::int16_t>(kOffDim);
  if (ndim < 1 || ndim > 7) throw DataError("NIfTI: dim[0] out of range");
  std::array<std::int16_t, 7> dim{};
  for (int i = 0; i < 7; ++i) {
    dim[i] = i < ndim ? r.get<std::int16_t>(kOffDim + 2 * (i + 1)) : 1;
    if (dim[i] < 1) throw DataError("NIfTI: non-positive dimension");
  }
  for (int i = 4; i < 7; ++i) {
    if (dim[i] != 1) throw DataError("NIfTI: more than four dimensions are not supported");
  }

  const auto datatype = r.get<std::int16_t>(kOffDatatype);
  if (!supported(datatype)) {
    throw DataError("NIfTI: unsupported datatype code " + std::to_string(datatype));
  }

  NiftiImage img;
  VolumeHeader& h = img.header;
  h.dims = {static_cast<std::size_t>(dim[0]), static_cast<std::size_t>(dim[1]),
            static_cast<std::size_t>(dim[2])};
  h.volumes = static_cast<std::size_t>(dim[3]);
  h.datatype = static_cast<DataType>(datatype);
  for (int i = 0; i < 3; ++i) {
    const float p = r.get<float>(kOffPixdim + 4 * (i + 1));
    h.voxel_size[i] = p > 0.0f ? p : 1.0;
  }

  if (r.get<std::int16_t>(kOffSformCode) > 0) {
    h.sform = Eigen::Matrix4d::Identity();
    for (int row = 0; row < 3; ++row)
      for (int col = 0; col < 4; ++col)
        h.sform(row, col) = r.get<float>(kOffSrowX + 16 * row + 4 * col);
  } else {
    h.sform = VolumeHeader::make(h.dims, h.volumes, h.voxel_size).sform;
  }

  const char* descrip = reinterpret_cast<const char*>(bytes.data() + kOffDescrip);
  h.description.assign(descrip, strnlen(descrip, kDescripLength));

  const float vox_offset_f = r.get<float>(kOffVoxOffset);
  if (!(vox_offset_f >= static_cast<float>(kNiftiDataOffset))) {
    throw DataError("NIfTI: vox_offset below 352");
  }
  const auto offset = static_cast<std::size_t>(vox_offset_f);
  const std::size_t count = h.element_count();
  const std::size_t esize = element_size(h.datatype);
  if (bytes.size() < offset || (bytes.size() - offset) / esize < count) {
    throw DataError("NIfTI: truncated payload (expected " + std::to_string(count * esize) +
                    " bytes after offset " + std::to_string(offset) + ")");
  }

  const Reader payload(bytes.subspan(offset), swap);
  img.data.resize(count);
  switch (h.datatype) {
    case DataType::UInt8:
      for (std::size_t i = 0; i < count; ++i)
        img.data[i] = static_cast<double>(payload.get<std::uint8_t>(i));
      break;
    case DataType::Float32:
      for (std::size_t i = 0; i < count; ++i) img.data[i] = payload.get<float>(4 * i);
      break;
    case DataType::Float64:
      for (std::size_t i = 0; i < count; ++i) img.data[i] = payload.get<double>(8 * i);
      break;
  }

  const float slope = r.get<float>(kOffSclSlope);
  const float inter = r.get<float>(kOffSclInter);
  if (slope != 0.0f && std::isfinite(slope) && !(slope == 1.0f && inter == 0.0f)) {
    for (double& v : img.data) v = v * slope + inter;
  }
  return img;
}

std::vector<std::byte> write_nifti(const VolumeHeader& header, std::span<const double> data) {
  if (data.size() != header.element_count()) {
    throw DataError("NIfTI: header describes " + std::to_string(header.element_count()) +
                    " elements but " + std::to_string(data.size()) + " were given");
  }
  constexpr auto kMaxDim = static_cast<std::size_t>(std::numeric_limits<std::int16_t>::max());
  for (std::size_t d : header.dims)
    if (d < 1 || d > kMaxDim) throw DataError("NIfTI: dimension out of range");
  if (header.volumes < 1 || header.volumes > kMaxDim) throw DataError("NIfTI: volume count out of range");

  const std::size_t esize = element_size(header.datatype);
  std::vector<std::byte> out(kNiftiDataOffset + data.size() * esize, std::byte{0});

  put<std::int32_t>(out, kOffSizeofHdr, static_cast<std::int32_t>(kNiftiHeaderSize));
  out[kOffRegular] = std::byte{'r'};
  const std::int16_t ndim = header.volumes > 1 ? 4 : 3;
  put<std::int16_t>(out, kOffDim, ndim);
  for (int i = 0; i < 3; ++i)
    put<std::int16_t>(out, kOffDim + 2 * (i + 1), static_cast<std::int16_t>(header.dims[i]));
  put<std::int16_t>(out, kOffDim + 8, static_cast<std::int16_t>(header.volumes));
  for (int i = 5; i < 8; ++i) put<std::int16_t>(out, kOffDim + 2 * i, 1);

  put<std::int16_t>(out, kOffDatatype, static_cast<std::int16_t>(header.datatype));
  put<std::int16_t>(out, kOffBitpix, static_cast<std::int16_t>(8 * esize));
  put<float>(out, kOffPixdim, 1.0f);  // qfac
  for (int i = 0; i < 3; ++i)
    put<float>(out, kOffPixdim + 4 * (i + 1), static_cast<float>(header.voxel_size[i]));
  for (int i = 4; i < 8; ++i) put<float>(out, kOffPixdim + 4 * i, 1.0f);
  put<float>(out, kOffVoxOffset, static_cast<float>(kNiftiDataOffset));
  put<float>(out, kOffSclSlope, 0.0f);
  put<float>(out, kOffSclInter, 0.0f);
  out[kOffXyztUnits] = std::byte{2 | 8};  // mm, s

  const std::size_t n = std::min(header.description.size(), kDescripLength - 1);
  std::memcpy(out.data() + kOffDescrip, header.description.data(), n);

  put<std::int16_t>(out, kOffQformCode, 0);
  put<std::int16_t>(out, kOffSformCode, 1);
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 4; ++col)
      put<float>(out, kOffSrowX + 16 * row + 4 * col, static_cast<float>(header.sform(row, col)));
  std::memcpy(out.data() + kOffMagic, "n+1\0", 4);

  std::byte* payload = out.data() + kNiftiDataOffset;
  switch (header.datatype) {
    case DataType::UInt8:
      for (std::size_t i = 0; i < data.size(); ++i) {
        const double v = std::clamp(std::round(data[i]), 0.0, 255.0);
        payload[i] = static_cast<std::byte>(static_cast<std::uint8_t>(v));
      }
      break;
    case DataType::Float32:
      for (std::size_t i = 0; i < data.size(); ++i) {
        float v = static_cast<float>(data[i]);
        if constexpr (std::endian::native == std::endian::big) v = byteswap_value(v);
        std::memcpy(payload + 4 * i, &v, 4);
      }
      break;
    case DataType::Float64:
      for (std::size_t i = 0; i < data.size(); ++i) {
        double v = data[i];
        if constexpr (std::endian::native == std::endian::big) v = byteswap_value(v);
        std::memcpy(payload + 8 * i, &v, 8);
      }
      break;
  }
  return out;
}

Volume load_volume(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto bytes = std::as_bytes(std::span<const char>(raw));
  try {
    NiftiImage img = read_nifti(bytes);
    return Volume(std::move(img.header), std::move(img.data));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_volume(const std::filesystem::path& path, const Volume& volume) {
  auto bytes = write_nifti(volume.header(), volume.data());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace qxfer

#include "klsal/npy.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <optional>
#include <string>
#include <string_view>

#include "klsal/error.hpp"
#include "klsal/io.hpp"

static_assert(std::endian::native == std::endian::little, "NPY I/O assumes a little-endian host");

namespace klsal::npy {

namespace {

constexpr std::uint8_t kMagic[] = {0x93, 'N', 'U', 'M', 'P', 'Y'};
constexpr std::size_t kPreludeLen = 10;  // magic + version + u16 header length
constexpr std::size_t kAlign = 64;
// numpy leaves room for the leading axis to grow in place.
constexpr std::size_t kGrowthAxisMaxDigits = 21;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Returns the raw text of the value stored under `key` in the header dict.
std::string_view dict_value(std::string_view header, std::string_view key) {
  std::string quoted = "'" + std::string(key) + "'";
  auto pos = header.find(quoted);
  if (pos == std::string_view::npos) {
    throw MalformedContainer("NPY header missing key " + quoted);
  }
  pos = header.find(':', pos + quoted.size());
  if (pos == std::string_view::npos) {
    throw MalformedContainer("NPY header key " + quoted + " has no value");
  }
  auto rest = trim(header.substr(pos + 1));
  std::size_t end = 0;
  if (!rest.empty() && rest.front() == '(') {
    end = rest.find(')');
    if (end == std::string_view::npos) throw MalformedContainer("NPY header shape tuple not closed");
    ++end;
  } else if (!rest.empty() && (rest.front() == '\'' || rest.front() == '"')) {
    end = rest.find(rest.front(), 1);
    if (end == std::string_view::npos) throw MalformedContainer("NPY header string not closed");
    ++end;
  } else {
    end = rest.find_first_of(",}");
    if (end == std::string_view::npos) throw MalformedContainer("NPY header value not terminated");
  }
  return trim(rest.substr(0, end));
}

Shape parse_shape(std::string_view text) {
  if (text.size() < 2 || text.front() != '(' || text.back() != ')') {
    throw MalformedContainer("NPY shape is not a tuple: " + std::string(text));
  }
  Shape shape;
  auto body = text.substr(1, text.size() - 2);
  while (!body.empty()) {
    auto comma = body.find(',');
    auto item = trim(body.substr(0, comma));
    if (!item.empty()) {
      std::size_t value = 0;
      for (char ch : item) {
        if (!std::isdigit(static_cast<unsigned char>(ch))) {
          throw MalformedContainer("NPY shape entry is not an integer: " + std::string(item));
        }
        value = value * 10 + static_cast<std::size_t>(ch - '0');
      }
      if (value == 0) {
        throw MalformedContainer("NPY arrays with zero-length axes are not supported");
      }
      shape.push_back(value);
    }
    if (comma == std::string_view::npos) break;
    body.remove_prefix(comma + 1);
  }
  return shape;
}

template <typename T>
std::vector<double> widen(const std::uint8_t* src, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    T v;
    std::memcpy(&v, src + i * sizeof(T), sizeof(T));
    out[i] = static_cast<double>(v);
  }
  return out;
}

}  // namespace

Tensor read(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPreludeLen || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw MalformedContainer("not an NPY container (bad magic)");
  }
  if (bytes[6] != 1 || bytes[7] != 0) {
    throw MalformedContainer("unsupported NPY version " + std::to_string(bytes[6]) + "." + std::to_string(bytes[7]));
  }
  const std::size_t header_len = bytes[8] | (static_cast<std::size_t>(bytes[9]) << 8);
  if (bytes.size() < kPreludeLen + header_len) {
    throw MalformedContainer("NPY header truncated");
  }
  std::string_view header(reinterpret_cast<const char*>(bytes.data() + kPreludeLen), header_len);
  header = trim(header);
  if (header.empty() || header.front() != '{' || header.back() != '}') {
    throw MalformedContainer("NPY header is not a dict literal");
  }

  auto descr = dict_value(header, "descr");
  if (descr.size() < 2) throw MalformedContainer("NPY descr malformed");
  descr = descr.substr(1, descr.size() - 2);
  std::size_t item_size = 0;
  if (descr == "<f8") {
    item_size = 8;
  } else if (descr == "<f4") {
    item_size = 4;
  } else {
    throw UnsupportedDType("unsupported NPY dtype '" + std::string(descr) + "' (need <f4 or <f8)");
  }

  auto fortran = dict_value(header, "fortran_order");
  if (fortran == "True") {
    throw UnsupportedDType("Fortran-ordered NPY arrays are not supported");
  }
  if (fortran != "False") {
    throw MalformedContainer("NPY fortran_order is not a boolean");
  }

  auto shape = parse_shape(dict_value(header, "shape"));
  const auto count = shape_size(shape);
  const auto payload = bytes.subspan(kPreludeLen + header_len);
  if (payload.size() != count * item_size) {
    throw MalformedContainer("NPY payload holds " + std::to_string(payload.size()) + " bytes, expected " +
                             std::to_string(count * item_size));
  }
  auto data = item_size == 8 ? widen<double>(payload.data(), count) : widen<float>(payload.data(), count);
  return Tensor(std::move(shape), std::move(data));
}

std::vector<std::uint8_t> write(const Tensor& t) {
  std::string header = "{'descr': '<f8', 'fortran_order': False, 'shape': " + shape_string(t.shape()) + ", }";
  if (t.rank() > 0) {
    header.append(kGrowthAxisMaxDigits - std::to_string(t.shape()[0]).size(), ' ');
  }
  const std::size_t pad = kAlign - (kPreludeLen + header.size() + 1) % kAlign;
  header.append(pad, ' ');
  header.push_back('\n');

  std::vector<std::uint8_t> out;
  out.reserve(kPreludeLen + header.size() + t.size() * sizeof(double));
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(1);
  out.push_back(0);
  out.push_back(static_cast<std::uint8_t>(header.size() & 0xff));
  out.push_back(static_cast<std::uint8_t>(header.size() >> 8));
  out.insert(out.end(), header.begin(), header.end());
  const auto* raw = reinterpret_cast<const std::uint8_t*>(t.data().data());
  out.insert(out.end(), raw, raw + t.size() * sizeof(double));
  return out;
}

Tensor load(const std::filesystem::path& path) {
  auto bytes = io::read_file(path);
  try {
    return read(bytes);
  } catch (const MalformedContainer& e) {
    throw MalformedContainer(path.string() + ": " + e.what());
  } catch (const UnsupportedDType& e) {
    throw UnsupportedDType(path.string() + ": " + e.what());
  }
}

void save(const std::filesystem::path& path, const Tensor& t) { io::write_file_atomic(path, write(t)); }

}  // namespace klsal::npy

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "mobgcn/errors.hpp"

namespace mobgcn::npy {

struct Array {
  std::vector<std::size_t> shape;
  std::vector<double> values;  // decoded to double regardless of dtype

  std::size_t count() const {
    std::size_t n = 1;
    for (auto s : shape) n *= s;
    return n;
  }
};

namespace detail {

inline std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  std::size_t e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

// Pulls "'key': value" out of the header dict. Values are either a quoted
// string, True/False, or a parenthesized tuple.
inline std::string dict_value(const std::string& header, const std::string& key) {
  std::string quoted = "'" + key + "'";
  std::size_t pos = header.find(quoted);
  if (pos == std::string::npos) throw FormatError("npy: header missing key " + key);
  pos = header.find(':', pos);
  if (pos == std::string::npos) throw FormatError("npy: malformed header");
  ++pos;
  while (pos < header.size() && (header[pos] == ' ')) ++pos;
  if (pos >= header.size()) throw FormatError("npy: malformed header");
  if (header[pos] == '\'') {
    std::size_t end = header.find('\'', pos + 1);
    if (end == std::string::npos) throw FormatError("npy: malformed header");
    return header.substr(pos + 1, end - pos - 1);
  }
  if (header[pos] == '(') {
    std::size_t end = header.find(')', pos);
    if (end == std::string::npos) throw FormatError("npy: malformed header");
    return header.substr(pos, end - pos + 1);
  }
  std::size_t end = header.find_first_of(",}", pos);
  return strip(header.substr(pos, end - pos));
}

inline std::vector<std::size_t> parse_shape(const std::string& tuple) {
  std::vector<std::size_t> shape;
  std::string cur;
  for (char ch : tuple) {
    if (ch >= '0' && ch <= '9') {
      cur += ch;
    } else if (!cur.empty()) {
      shape.push_back(static_cast<std::size_t>(std::stoull(cur)));
      cur.clear();
    }
  }
  if (!cur.empty()) shape.push_back(static_cast<std::size_t>(std::stoull(cur)));
  return shape;
}

template <typename T>
void decode(const std::vector<char>& bytes, std::vector<double>& out) {
  const std::size_t n = bytes.size() / sizeof(T);
  out.resize(n);
  const T* src = reinterpret_cast<const T*>(bytes.data());
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(src[i]);
}

}  // namespace detail

inline Array load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("npy: cannot open " + path);

  char magic[6];
  in.read(magic, 6);
  if (!in || std::memcmp(magic, "\x93NUMPY", 6) != 0)
    throw FormatError("npy: bad magic in " + path);
  unsigned char ver[2];
  in.read(reinterpret_cast<char*>(ver), 2);
  if (!in || ver[0] != 1) throw FormatError("npy: only version 1.0 supported");
  unsigned char lenb[2];
  in.read(reinterpret_cast<char*>(lenb), 2);
  if (!in) throw FormatError("npy: truncated header");
  const std::size_t hlen = lenb[0] | (std::size_t(lenb[1]) << 8);
  std::string header(hlen, '\0');
  in.read(header.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw FormatError("npy: truncated header");

  const std::string descr = detail::dict_value(header, "descr");
  const std::string fortran = detail::dict_value(header, "fortran_order");
  if (fortran != "False") throw FormatError("npy: fortran order not supported");

  Array arr;
  arr.shape = detail::parse_shape(detail::dict_value(header, "shape"));

  std::size_t item;
  if (descr == "<f4") item = 4;
  else if (descr == "<f8") item = 8;
  else if (descr == "<i4") item = 4;
  else if (descr == "<i8") item = 8;
  else throw FormatError("npy: unsupported dtype " + descr);

  const std::size_t expected = arr.count() * item;
  std::vector<char> bytes(expected);
  in.read(bytes.data(), static_cast<std::streamsize>(expected));
  if (static_cast<std::size_t>(in.gcount()) != expected)
    throw DataError("npy: payload size mismatch in " + path);

  if (descr == "<f4") detail::decode<float>(bytes, arr.values);
  else if (descr == "<f8") detail::decode<double>(bytes, arr.values);
  else if (descr == "<i4") detail::decode<std::int32_t>(bytes, arr.values);
  else detail::decode<std::int64_t>(bytes, arr.values);
  return arr;
}

namespace detail {

inline void write_header(std::ofstream& out, const std::string& descr,
                         const std::vector<std::size_t>& shape) {
  std::string tuple = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    tuple += std::to_string(shape[i]);
    if (shape.size() == 1 || i + 1 < shape.size()) tuple += ",";
    if (i + 1 < shape.size()) tuple += " ";
  }
  tuple += ")";
  std::string dict =
      "{'descr': '" + descr + "', 'fortran_order': False, 'shape': " + tuple + ", }";
  // total header (magic..newline) padded to a multiple of 64
  std::size_t unpadded = 10 + dict.size() + 1;
  std::size_t pad = (64 - unpadded % 64) % 64;
  dict += std::string(pad, ' ');
  dict += '\n';
  out.write("\x93NUMPY\x01\x00", 8);
  const std::size_t hlen = dict.size();
  unsigned char lenb[2] = {static_cast<unsigned char>(hlen & 0xff),
                           static_cast<unsigned char>((hlen >> 8) & 0xff)};
  out.write(reinterpret_cast<char*>(lenb), 2);
  out.write(dict.data(), static_cast<std::streamsize>(dict.size()));
}

}  // namespace detail

inline void save_f32(const std::string& path, const std::vector<std::size_t>& shape,
                     const std::vector<float>& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("npy: cannot write " + path);
  detail::write_header(out, "<f4", shape);
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
}

inline void save_f64(const std::string& path, const std::vector<std::size_t>& shape,
                     const std::vector<double>& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("npy: cannot write " + path);
  detail::write_header(out, "<f8", shape);
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
}

inline void save_i32(const std::string& path, const std::vector<std::size_t>& shape,
                     const std::vector<std::int32_t>& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("npy: cannot write " + path);
  detail::write_header(out, "<i4", shape);
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(std::int32_t)));
}

}  // namespace mobgcn::npy

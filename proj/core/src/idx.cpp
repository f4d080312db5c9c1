#include "modeconnect/idx.hpp"

#include <fstream>

#include "modeconnect/errors.hpp"

namespace mc {

namespace {

std::uint32_t read_be_u32(std::ifstream& in, const std::string& path, long long& offset) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw ParseError("load_idx: " + path + " truncated while reading header", offset);
  offset += 4;
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_be_u32(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw IoError("load_idx: cannot open " + images_path);
  std::ifstream lbl(labels_path, std::ios::binary);
  if (!lbl) throw IoError("load_idx: cannot open " + labels_path);

  long long img_offset = 0;
  const std::uint32_t img_magic = read_be_u32(img, images_path, img_offset);
  if (img_magic != 0x00000803u)
    throw ParseError("load_idx: bad image magic 0x" + [&] {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%08x", img_magic);
      return std::string(buf);
    }() + " in " + images_path + ", expected 0x00000803", 0);
  const std::uint32_t n_images = read_be_u32(img, images_path, img_offset);
  const std::uint32_t rows = read_be_u32(img, images_path, img_offset);
  const std::uint32_t cols = read_be_u32(img, images_path, img_offset);

  long long lbl_offset = 0;
  const std::uint32_t lbl_magic = read_be_u32(lbl, labels_path, lbl_offset);
  if (lbl_magic != 0x00000801u)
    throw ParseError("load_idx: bad label magic in " + labels_path + ", expected 0x00000801", 0);
  const std::uint32_t n_labels = read_be_u32(lbl, labels_path, lbl_offset);
  if (n_images != n_labels)
    throw ParseError("load_idx: " + std::to_string(n_images) + " images but " + std::to_string(n_labels) + " labels",
                     4);

  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  Dataset data;
  data.features = Matrix(static_cast<int>(pixels), static_cast<int>(n_images));
  data.labels.resize(n_images);
  data.classes = 10;

  std::vector<unsigned char> buf(pixels);
  for (std::uint32_t q = 0; q < n_images; ++q) {
    img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels));
    if (!img) throw ParseError("load_idx: " + images_path + " truncated in image " + std::to_string(q), img_offset);
    img_offset += static_cast<long long>(pixels);
    for (std::size_t p = 0; p < pixels; ++p)
      data.features(static_cast<int>(p), static_cast<int>(q)) = buf[p] / 255.0;
  }
  std::vector<unsigned char> lbuf(n_labels);
  lbl.read(reinterpret_cast<char*>(lbuf.data()), static_cast<std::streamsize>(n_labels));
  if (!lbl) throw ParseError("load_idx: " + labels_path + " truncated in label block", lbl_offset);
  int max_label = 0;
  for (std::uint32_t q = 0; q < n_labels; ++q) {
    data.labels[q] = lbuf[q];
    max_label = std::max(max_label, static_cast<int>(lbuf[q]));
  }
  if (max_label >= data.classes) data.classes = max_label + 1;
  data.validate();
  return data;
}

void write_idx_images(const std::string& path, const std::vector<std::vector<std::uint8_t>>& images, int rows,
                      int cols) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_idx_images: cannot open " + path);
  write_be_u32(out, 0x00000803u);
  write_be_u32(out, static_cast<std::uint32_t>(images.size()));
  write_be_u32(out, static_cast<std::uint32_t>(rows));
  write_be_u32(out, static_cast<std::uint32_t>(cols));
  for (const auto& image : images) {
    if (static_cast<int>(image.size()) != rows * cols) throw InvalidArgument("write_idx_images: wrong image size");
    out.write(reinterpret_cast<const char*>(image.data()), static_cast<std::streamsize>(image.size()));
  }
  if (!out) throw IoError("write_idx_images: write failed for " + path);
}

void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_idx_labels: cannot open " + path);
  write_be_u32(out, 0x00000801u);
  write_be_u32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
  if (!out) throw IoError("write_idx_labels: write failed for " + path);
}

}  // namespace mc

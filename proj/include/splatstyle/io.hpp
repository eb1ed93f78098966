#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "splatstyle/tensor.hpp"

namespace splatstyle {

// Self-describing raw-tensor container:
//   magic "MVLT", u32 version=1, u8 dtype (0 = f32), u32 rank, u32 dims[rank],
//   payload row-major, little-endian. Doubles are rounded to f32 on save.
void write_tensor_block(std::ostream& out, const std::vector<std::uint32_t>& dims,
                        const double* data);
void read_tensor_block(std::istream& in, std::vector<std::uint32_t>& dims,
                       std::vector<double>& data);

void save_stack(const MultiViewLatent& stack, const std::string& path);
MultiViewLatent load_stack(const std::string& path);

// Lossy 8-bit view for human inspection. Writes <prefix>_view{N:03}.png per
// view plus <prefix>_norm.json recording the per-channel min-max mapping.
// Supports 1-channel (grayscale) and 3-channel (RGB) stacks.
void export_png_views(const MultiViewLatent& stack, const std::string& prefix);

void write_png_rgb8(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& rgb);
void write_png_gray8(const std::string& path, int width, int height,
                     const std::vector<std::uint8_t>& gray);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const void* data, std::size_t size);

} // namespace splatstyle

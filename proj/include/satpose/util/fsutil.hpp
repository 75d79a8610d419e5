#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace satpose {

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_binary_file(const std::filesystem::path& path, const void* data, std::size_t size);
void ensure_dir(const std::filesystem::path& dir);

// Sorted relative filenames matching an extension (deterministic listing).
std::vector<std::string> list_files(const std::filesystem::path& dir, const std::string& ext);

}  // namespace satpose

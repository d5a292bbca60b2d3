// Copyright 2026 the scratch-ir authors
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace scratchir {

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);
bool file_exists(const std::string& path);

/// SHA-256 of a byte string, lowercase hex. Used for manifest checksums.
std::string sha256_hex(const std::string& data);
std::string sha256_file_hex(const std::string& path);

/// Number of worker threads to use: min(requested, SCRATCH_IR_THREADS if
/// set, hardware_concurrency). Always >= 1.
int effective_threads(int requested);

/// Deterministic parallel map: items are processed independently and
/// results land in pre-assigned slots, so the outcome does not depend on
/// the degree of parallelism.
void parallel_for(size_t count, int threads, const std::function<void(size_t)>& fn);

// little-endian scalar encode/decode for binary file formats
void append_u32_le(std::string& out, uint32_t v);
void append_u64_le(std::string& out, uint64_t v);
void append_f32_le(std::string& out, float v);
uint32_t read_u32_le(const std::string& buf, size_t& pos);
uint64_t read_u64_le(const std::string& buf, size_t& pos);
float read_f32_le(const std::string& buf, size_t& pos);

}  // namespace scratchir

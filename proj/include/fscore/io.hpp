// Copyright 2026 The fscore Authors
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

#ifndef FSCORE_IO_HPP_
#define FSCORE_IO_HPP_

#include <string>

#include <Eigen/Dense>

namespace fscore {

// Shortest round-trippable decimal form of a double.
std::string format_double(double v);

// Headerless CSV, one point per row, one column per coordinate.
Eigen::MatrixXd read_points_csv(const std::string& path);
std::string points_to_csv(const Eigen::MatrixXd& points);

// Write via a sibling temp file and rename, so readers never see a partial file.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace fscore

#endif  // FSCORE_IO_HPP_

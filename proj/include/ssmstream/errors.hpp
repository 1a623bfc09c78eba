#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace ssmstream {

// Malformed input text: JSON syntax, non-numeric CSV fields, truncated binary.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A model that parses but violates a structural rule. Carries the id of the
// offending node when there is one.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
  ValidationError(std::string node_id, const std::string& what)
      : std::runtime_error("node '" + node_id + "': " + what), node_id_(std::move(node_id)) {}

  const std::string& node_id() const noexcept { return node_id_; }

 private:
  std::string node_id_;
};

// Window stride that does not line up with the model's temporal downsampling.
class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ssmstream

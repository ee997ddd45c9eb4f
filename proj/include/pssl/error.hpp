#ifndef PSSL_ERROR_HPP
#define PSSL_ERROR_HPP

#include <stdexcept>
#include <string>

namespace pssl {

// Exception carrying a stable, machine-checkable error code such as
// "image-too-small" or "learning-frozen" alongside a human message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace pssl

#endif  // PSSL_ERROR_HPP

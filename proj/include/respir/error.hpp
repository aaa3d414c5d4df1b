#pragma once

#include <stdexcept>
#include <string>

namespace respir {

// Base for all library errors. `user_input` distinguishes bad inputs
// (files, configs, preconditions) from internal failures; the CLI maps
// the former to exit code 2 and the latter to 1.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg, bool user_input = true)
        : std::runtime_error(msg), user_input_(user_input) {}

    bool is_user_input() const { return user_input_; }

private:
    bool user_input_;
};

}  // namespace respir

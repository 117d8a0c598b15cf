#pragma once

#include <stdexcept>
#include <string>

namespace mcpt {

enum class errc {
    io = 1,
    parse,
    config,
    input,
    state,
    degenerate,
    internal,
};

class error : public std::runtime_error {
public:
    error(errc code, std::string msg) : std::runtime_error(std::move(msg)), code_(code) {}
    errc code() const { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void throw_io(const std::string& msg) { throw error(errc::io, msg); }
[[noreturn]] inline void throw_parse(const std::string& msg) { throw error(errc::parse, msg); }
[[noreturn]] inline void throw_config(const std::string& msg) { throw error(errc::config, msg); }
[[noreturn]] inline void throw_input(const std::string& msg) { throw error(errc::input, msg); }
[[noreturn]] inline void throw_state(const std::string& msg) { throw error(errc::state, msg); }
[[noreturn]] inline void throw_degenerate(const std::string& msg) { throw error(errc::degenerate, msg); }
[[noreturn]] inline void throw_internal(const std::string& msg) { throw error(errc::internal, msg); }

} // namespace mcpt

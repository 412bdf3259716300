#pragma once

// Diagnostics on stderr, filtered by USLADS_LOG={error,info,debug}.

#include <cstdlib>
#include <iostream>
#include <string_view>

namespace uslads::log {

enum class Level
{
  error = 0,
  info = 1,
  debug = 2,
};

inline Level level_from_env()
{
  const char* env = std::getenv("USLADS_LOG");
  if (!env)
    return Level::info;
  const std::string_view v(env);
  if (v == "error")
    return Level::error;
  if (v == "debug")
    return Level::debug;
  return Level::info;
}

inline Level current_level()
{
  static const Level lvl = level_from_env();
  return lvl;
}

template <typename... Args>
void write(Level lvl, std::string_view tag, const Args&... args)
{
  if (static_cast<int>(lvl) > static_cast<int>(current_level()))
    return;
  std::cerr << "[uslads " << tag << "] ";
  (std::cerr << ... << args);
  std::cerr << '\n';
}

template <typename... Args>
void error(const Args&... args)
{
  write(Level::error, "error", args...);
}

template <typename... Args>
void info(const Args&... args)
{
  write(Level::info, "info", args...);
}

template <typename... Args>
void debug(const Args&... args)
{
  write(Level::debug, "debug", args...);
}

} // namespace uslads::log

#pragma once

#include <sstream>
#include <string>

namespace amf::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

// Level comes from GIBS_AMF_LOG (debug/info/warn/error/off) unless set
// explicitly. Default is warn.
Level level();
void set_level(Level lvl);
bool parse_level(const std::string& name, Level* out);

// Line-oriented writes to stderr, serialized across threads.
void write(Level lvl, const std::string& message);

inline void debug(const std::string& m) { write(Level::Debug, m); }
inline void info(const std::string& m) { write(Level::Info, m); }
inline void warn(const std::string& m) { write(Level::Warn, m); }
inline void error(const std::string& m) { write(Level::Error, m); }

}  // namespace amf::log

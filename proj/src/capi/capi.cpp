#include "gibsamf.h"

#include <cstring>
#include <string>

#include "core/common.hpp"
#include "core/config.hpp"
#include "core/pipeline.hpp"

struct amf_config {
  amf::RunConfig config;
};

namespace {

thread_local std::string t_last_error;

amf_status status_of(amf::ErrorKind kind) {
  switch (kind) {
    case amf::ErrorKind::InvalidArgument: return AMF_ERR_INVALID_ARGUMENT;
    case amf::ErrorKind::Parse: return AMF_ERR_PARSE;
    case amf::ErrorKind::Data: return AMF_ERR_DATA;
    case amf::ErrorKind::Numeric: return AMF_ERR_NUMERIC;
    case amf::ErrorKind::Io: return AMF_ERR_IO;
    case amf::ErrorKind::Internal: return AMF_ERR_INTERNAL;
  }
  return AMF_ERR_INTERNAL;
}

template <typename Fn>
amf_status guarded(Fn&& fn) {
  try {
    fn();
    t_last_error.clear();
    return AMF_OK;
  } catch (const amf::Error& e) {
    t_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return AMF_ERR_INTERNAL;
  } catch (...) {
    t_last_error = "unknown error";
    return AMF_ERR_INTERNAL;
  }
}

amf_status invalid(const char* message) {
  t_last_error = message;
  return AMF_ERR_INVALID_ARGUMENT;
}

}  // namespace

#ifndef GIBSAMF_VERSION
#define GIBSAMF_VERSION "0.0.0-dev"
#endif

extern "C" {

const char* amf_version(void) { return GIBSAMF_VERSION; }

const char* amf_status_name(amf_status status) {
  switch (status) {
    case AMF_OK: return "ok";
    case AMF_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case AMF_ERR_PARSE: return "parse";
    case AMF_ERR_DATA: return "data";
    case AMF_ERR_NUMERIC: return "numeric";
    case AMF_ERR_IO: return "io";
    case AMF_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* amf_last_error(void) { return t_last_error.c_str(); }

amf_status amf_config_create(amf_config** out) {
  if (out == nullptr) return invalid("amf_config_create: out is null");
  return guarded([&] { *out = new amf_config{}; });
}

void amf_config_destroy(amf_config* config) { delete config; }

amf_status amf_config_load_file(amf_config* config, const char* path) {
  if (config == nullptr || path == nullptr) return invalid("null argument");
  return guarded([&] {
    amf::RunConfig loaded = amf::load_config_file(path);
    config->config = std::move(loaded);
  });
}

amf_status amf_config_load_string(amf_config* config, const char* json_text) {
  if (config == nullptr || json_text == nullptr) return invalid("null argument");
  return guarded([&] {
    amf::RunConfig loaded = amf::parse_config_text(json_text);
    config->config = std::move(loaded);
  });
}

amf_status amf_config_set(amf_config* config, const char* key, const char* value) {
  if (config == nullptr || key == nullptr || value == nullptr) return invalid("null argument");
  return guarded([&] { amf::set_option(config->config, key, value); });
}

amf_status amf_config_get(const amf_config* config, const char* key, char* buf,
                          size_t buf_len) {
  if (config == nullptr || key == nullptr || buf == nullptr || buf_len == 0) {
    return invalid("null argument");
  }
  return guarded([&] {
    std::string value = amf::get_option(config->config, key);
    if (value.size() + 1 > buf_len) {
      amf::raise(amf::ErrorKind::InvalidArgument,
                 "buffer too small: need " + std::to_string(value.size() + 1) + " bytes");
    }
    std::memcpy(buf, value.c_str(), value.size() + 1);
  });
}

amf_status amf_run_synth(const amf_config* config) {
  if (config == nullptr) return invalid("null config");
  return guarded([&] { amf::pipeline::cmd_synth(config->config); });
}

amf_status amf_run_pipeline(const amf_config* config) {
  if (config == nullptr) return invalid("null config");
  return guarded([&] { amf::pipeline::cmd_run(config->config); });
}

amf_status amf_run_dims(const amf_config* config) {
  if (config == nullptr) return invalid("null config");
  return guarded([&] { amf::pipeline::cmd_dims(config->config); });
}

}  // extern "C"

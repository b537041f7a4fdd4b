#ifndef MASREST_H
#define MASREST_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every function.
 */
typedef enum MasrestStatus {
  MASREST_STATUS_OK = 0,
  MASREST_STATUS_NULL_ARGUMENT = 1,
  MASREST_STATUS_INVALID_UTF8 = 2,
  MASREST_STATUS_NOT_FOUND = 3,
  MASREST_STATUS_CONFLICT = 4,
  MASREST_STATUS_PARSE_ERROR = 5,
  MASREST_STATUS_INVALID_SPEC = 6,
  MASREST_STATUS_UNSUPPORTED = 7,
  MASREST_STATUS_REJECTED = 8,
  MASREST_STATUS_IO = 9,
  MASREST_STATUS_PANIC = 10,
} MasrestStatus;

/**
 * A running system plus its REST facade.
 */
typedef struct MasrestSystem MasrestSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates an empty in-memory system with its scheduler paused.
 */
struct MasrestSystem *masrest_system_new(void);

/**
 * Validates and boots a project file. The scheduler stays paused; drive it
 * with [`masrest_run_until_quiescent`].
 *
 * # Safety
 * `path` is a NUL-terminated string; `out` points to writable storage.
 */
enum MasrestStatus masrest_system_from_project(const char *path, struct MasrestSystem **out);

/**
 * Stops the system and frees the handle. Null is ignored.
 *
 * # Safety
 * `sys` is null or a handle not yet freed.
 */
void masrest_system_free(struct MasrestSystem *sys);

/**
 * # Safety
 * Pointers are valid for the call; strings are NUL-terminated.
 */
enum MasrestStatus masrest_spawn_agent(const struct MasrestSystem *sys,
                                       const char *name,
                                       const char *source);

/**
 * # Safety
 * Pointers are valid for the call; strings are NUL-terminated.
 */
enum MasrestStatus masrest_kill_agent(const struct MasrestSystem *sys, const char *name);

/**
 * Queues a message; its id is written to `out_id` when non-null.
 *
 * # Safety
 * Pointers are valid for the call; strings are NUL-terminated.
 */
enum MasrestStatus masrest_send_message(const struct MasrestSystem *sys,
                                        const char *to,
                                        const char *sender,
                                        const char *performative,
                                        const char *content,
                                        uint64_t *out_id);

/**
 * Steps every agent until nothing is left to do or `max_rounds` pass.
 * Writes whether the system went quiet to `out_quiescent` when non-null.
 *
 * # Safety
 * `sys` is a live handle; `out_quiescent` is null or writable.
 */
enum MasrestStatus masrest_run_until_quiescent(const struct MasrestSystem *sys,
                                               uint32_t max_rounds,
                                               bool *out_quiescent);

/**
 * Sends one request through the REST layer without a network. `body` may
 * be null. The HTTP status goes to `out_status` and the JSON body (empty
 * for 204) to `out_body`, which the caller frees.
 *
 * # Safety
 * Pointers are valid for the call; `out_status` and `out_body` are writable.
 */
enum MasrestStatus masrest_request(const struct MasrestSystem *sys,
                                   const char *method,
                                   const char *target,
                                   const char *body,
                                   uint16_t *out_status,
                                   char **out_body);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` is null or came from this library and was not freed already.
 */
void masrest_string_free(char *s);

/**
 * Message for the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *masrest_last_error(void);

/**
 * Status code name, for diagnostics. Never null; static storage.
 */
const char *masrest_status_name(enum MasrestStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MASREST_H */

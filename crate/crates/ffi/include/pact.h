#ifndef PACT_H
#define PACT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdint.h>

typedef enum PactStatus {
  PACT_STATUS_OK = 0,
  PACT_STATUS_NULL_POINTER = 1,
  PACT_STATUS_INVALID_UTF8 = 2,
  PACT_STATUS_INVALID_SPEC = 3,
  PACT_STATUS_ENGINE_ERROR = 4,
  PACT_STATUS_MALFORMED_EVENT = 5,
  PACT_STATUS_STALE_TIMESTAMP = 6,
  PACT_STATUS_TERMINATED = 7,
  PACT_STATUS_UNEXPECTED_EVENT = 8,
  PACT_STATUS_PANIC = 99,
} PactStatus;

/**
 * A parsed and validated contract.
 */
typedef struct PactContract PactContract;

/**
 * A monitoring session on a contract.
 */
typedef struct PactSession PactSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The last error message on this thread, or NULL. The pointer stays valid
 * until the next failing call on the same thread; do not free it.
 */
const char *pact_last_error(void);

/**
 * Release a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void pact_string_free(char *s);

/**
 * Parse and validate `.pact` source. On [`PactStatus::InvalidSpec`] the last
 * error lists every error diagnostic, one per line.
 *
 * # Safety
 * `source` must be a NUL-terminated string and `out` writable.
 */
enum PactStatus pact_contract_parse(const char *source, struct PactContract **out);

/**
 * # Safety
 * `contract` must come from [`pact_contract_parse`] and not be freed twice.
 */
void pact_contract_free(struct PactContract *contract);

/**
 * Graphviz rendering of the state graph.
 *
 * # Safety
 * `contract` must be a live handle and `out` writable.
 */
enum PactStatus pact_contract_graph_dot(const struct PactContract *contract, char **out);

/**
 * The state graph as a JSON document.
 *
 * # Safety
 * `contract` must be a live handle and `out` writable.
 */
enum PactStatus pact_contract_graph_json(const struct PactContract *contract, char **out);

/**
 * Terminals, contrary-to-duty triples and provision classes as JSON.
 *
 * # Safety
 * `contract` must be a live handle and `out` writable.
 */
enum PactStatus pact_contract_analysis_json(const struct PactContract *contract, char **out);

/**
 * Open a session with the clock at `epoch`. The session keeps its own
 * reference to the contract, so the contract handle may be freed first.
 *
 * # Safety
 * `contract` must be a live handle and `out` writable.
 */
enum PactStatus pact_session_open(const struct PactContract *contract,
                                  uint64_t epoch,
                                  struct PactSession **out);

/**
 * # Safety
 * `session` must come from [`pact_session_open`] and not be freed twice.
 */
void pact_session_free(struct PactSession *session);

/**
 * Submit one event line, e.g. `t=20 agent=s act=alpha attrs{qty="1"}`.
 * When `records_out` is non-NULL it receives the produced transition
 * records as a JSON array. A blank or comment line is a no-op.
 *
 * # Safety
 * `session` must be a live handle; `line` NUL-terminated.
 */
enum PactStatus pact_session_submit_line(struct PactSession *session,
                                         const char *line,
                                         char **records_out);

/**
 * Advance the clock, lapsing overdue obligations.
 *
 * # Safety
 * `session` must be a live handle.
 */
enum PactStatus pact_session_advance_clock(struct PactSession *session,
                                           uint64_t to,
                                           char **records_out);

/**
 * Current clock, canonical state key and active norms as JSON.
 *
 * # Safety
 * `session` must be a live handle and `out` writable.
 */
enum PactStatus pact_session_state_json(const struct PactSession *session, char **out);

/**
 * The transition log as a JSON array.
 *
 * # Safety
 * `session` must be a live handle and `out` writable.
 */
enum PactStatus pact_session_history_json(const struct PactSession *session, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PACT_H */

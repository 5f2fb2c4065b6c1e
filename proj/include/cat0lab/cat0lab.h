#ifndef CAT0LAB_H
#define CAT0LAB_H

/* Public C surface of the cat0lab shared library.
 *
 * All functionality is exposed through one coarse entry point mirroring the
 * CLI subcommands: pass a subcommand name and a JSON config, get back an
 * opaque result handle carrying the run record as JSON.
 *
 * Return codes: 0 complete/PASS, 2 a checked inequality failed, 1 error
 * (see c0l_last_error). Handles must be released with c0l_result_free.
 */

#ifdef __cplusplus
extern "C" {
#endif

typedef struct c0l_result c0l_result;

/* subcommand: drift | conv-comb | fixed-point | shalom | grigorchuk-audit |
 * space-check. config_json: UTF-8 JSON object. On return != 1, *out (when
 * non-NULL) receives a handle. */
int c0l_run(const char* subcommand, const char* config_json, c0l_result** out);

/* Run record JSON; owned by the handle, valid until c0l_result_free. */
const char* c0l_result_json(const c0l_result* r);
int c0l_result_exit_code(const c0l_result* r);
void c0l_result_free(c0l_result* r);

/* Thread-local message for the most recent failing call in this thread;
 * empty string if none. */
const char* c0l_last_error(void);

const char* c0l_version(void);

#ifdef __cplusplus
}
#endif

#endif /* CAT0LAB_H */

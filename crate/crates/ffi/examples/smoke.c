#include <stdio.h>
#include "rvp.h"

int main(void) {
    const char *text = "scenario = \"radial-shell\"\nn = 64\ndt = 0.01\nt_end = 0.05\n";
    RvpConfig *cfg = NULL;
    RvpSession *session = NULL;
    if (rvp_config_parse(text, &cfg) != RVP_STATUS_OK) {
        fprintf(stderr, "%s\n", rvp_last_error_message());
        return 1;
    }
    if (rvp_session_new(cfg, &session) != RVP_STATUS_OK || rvp_session_run(session) != RVP_STATUS_OK) {
        fprintf(stderr, "%s\n", rvp_last_error_message());
        rvp_session_free(session);
        rvp_config_free(cfg);
        return 1;
    }
    char *csv = rvp_session_diagnostics_csv(session);
    fputs(csv, stdout);
    rvp_string_free(csv);
    rvp_session_free(session);
    rvp_config_free(cfg);
    return 0;
}

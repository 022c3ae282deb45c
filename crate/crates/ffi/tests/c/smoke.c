#include <stdio.h>
#include "svaug.h"

int main(void) {
    uint64_t counts[9] = {5, 0, 0, 0, 3, 0, 0, 0, 2};
    double mcc = 0.0;
    if (svaug_multiclass_mcc(counts, &mcc) != SVAUG_STATUS_OK || mcc != 1.0) {
        return 1;
    }
    char *tokens = NULL;
    if (svaug_preprocess("Remote attackers overflow buffers", &tokens) != SVAUG_STATUS_OK) {
        return 2;
    }
    printf("%s\n", tokens);
    svaug_string_free(tokens);
    if (svaug_preprocess(NULL, &tokens) != SVAUG_STATUS_NULL_POINTER) {
        return 3;
    }
    printf("%s\n", svaug_last_error());
    return 0;
}

# Tests for aipw-longitudinal

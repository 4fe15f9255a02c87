# Tests for the QAM index code services, CLI and API

"""Unit tests for shared configuration and errors."""


class TestSettings:
    """Test the environment-backed settings."""

    def test_debug_overrides_log_level(self):
        """Test DEBUG wins over LOG_LEVEL."""
        from shared.config import Settings

        assert Settings(debug=True, log_level="warning").effective_log_level == "DEBUG"
        assert Settings(debug=False, log_level="warning").effective_log_level == "WARNING"

    def test_environment_override(self, monkeypatch):
        """Test fields are read from the environment."""
        from shared.config import Settings

        monkeypatch.setenv("SIGMA0", "40")
        assert Settings().sigma0 == 40.0

    def test_volume_quadrature_degree(self):
        """Test over-integration adds the configured extra degree."""
        from shared.config import Settings

        assert Settings(quadrature_extra_degree=4).volume_quadrature_degree(3) == 10

    def test_penalty_by_degree(self, monkeypatch):
        """Test cubics read SIGMA0_CUBIC and XI0_CUBIC, quadratics SIGMA0 and XI0."""
        from shared.config import Settings

        monkeypatch.setenv("SIGMA0_CUBIC", "300")
        settings = Settings(sigma0=20.0, xi0=20.0, xi0_cubic=250.0)
        assert settings.penalty_values(2) == (20.0, 20.0)
        assert settings.penalty_values(3) == (300.0, 250.0)


class TestErrors:
    """Test the solver error hierarchy."""

    def test_hierarchy(self):
        """Test run failures are SolverErrors and input problems are ValueErrors."""
        from shared.errors import (
            DegenerateElementError,
            IncompatibleMeshError,
            QuadratureError,
            ResourceLimitError,
            SingularSystemError,
            SolverError,
            TimeStepUnderflowError,
        )

        for error in (ResourceLimitError, SingularSystemError, TimeStepUnderflowError):
            assert issubclass(error, SolverError)
        for error in (DegenerateElementError, IncompatibleMeshError, QuadratureError):
            assert issubclass(error, ValueError)

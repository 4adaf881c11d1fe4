import math

import pytest
from fastapi.testclient import TestClient
from unittest.mock import patch
from app.main import app

client = TestClient(app)


class TestPubEndpoint:
    """Tests for POST /pub"""

    def test_compute_pub(self):
        """Test POST /pub - dense, batchnorm and residual layers"""
        layers = [
            {"kind": "dense", "norm": 2.0},
            {"kind": "batchnorm", "gamma": [3.0, -1.0], "running_var": [1.0, 1.0], "eps": 1e-5},
            {"kind": "residual", "main": [{"kind": "dense", "norm": 0.5}]},
            {"kind": "pooling"},
        ]

        response = client.post("/api/v1/pub", json=layers)

        assert response.status_code == 200
        data = response.json()
        expected = 2.0 * 3.0 / math.sqrt(1.0 + 1e-5) * 1.5
        assert data["pub"] == pytest.approx(expected, rel=1e-9)
        assert data["log_pub"] == pytest.approx(math.log(expected), rel=1e-9)
        assert [layer["kind"] for layer in data["per_layer"]] == ["dense", "batchnorm", "residual", "pooling"]

    def test_deep_residual_overflow(self):
        """Test POST /pub - residual over a huge main path reports log values and null products"""
        layers = [{"kind": "residual", "main": [{"kind": "dense", "norm": 1e10, "repeat": 40}]}]

        response = client.post("/api/v1/pub", json=layers)

        assert response.status_code == 200
        data = response.json()
        assert data["pub"] is None
        assert data["log_pub"] == pytest.approx(400 * math.log(10.0), rel=1e-12)
        assert data["per_layer"][0]["lipschitz"] is None

    def test_unknown_kind(self):
        """Test POST /pub - discriminator rejects unknown kinds"""
        response = client.post("/api/v1/pub", json=[{"kind": "attention"}])

        assert response.status_code == 422

    def test_dense_needs_one_operator(self):
        """Test POST /pub - dense layer with neither matrix nor norm"""
        response = client.post("/api/v1/pub", json=[{"kind": "dense"}])

        assert response.status_code == 422

    def test_value_error(self):
        """Test POST /pub - rejected chain gives 400"""
        with patch("app.api.pub.pub", side_effect=ValueError("empty layer chain")):
            response = client.post("/api/v1/pub", json=[{"kind": "pooling"}])

        assert response.status_code == 400
        assert "empty" in response.json()["detail"]

    def test_unexpected_error(self):
        """Test POST /pub - unexpected failure gives 500"""
        with patch("app.api.pub.pub", side_effect=Exception("boom")):
            response = client.post("/api/v1/pub", json=[{"kind": "pooling"}])

        assert response.status_code == 500
        assert "Error computing PUB" in response.json()["detail"]

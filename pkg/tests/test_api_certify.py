import pytest
from fastapi.testclient import TestClient
from unittest.mock import patch
from app.main import app
from app.core.errors import DataError, SolverError
from app.models.reports import CertificateRow

client = TestClient(app)

RECORDS = [
    {"input_id": "img-0", "phase": "selection", "n": 100, "counts": {"0": 97, "1": 3}},
    {"input_id": "img-0", "phase": "estimation", "n": 10000, "counts": {"0": 9700, "1": 200, "2": 100}},
]


@pytest.fixture
def mock_certification_service():
    """Mock CertificationService"""
    with patch('app.api.certify.certification_service') as mock_service:
        yield mock_service


class TestCertifyEndpoints:
    """Tests for certification endpoints"""

    def test_certify_cpm(self):
        """Test POST /certify/cpm against the real service"""
        response = client.post("/api/v1/certify/cpm", json=RECORDS, params={"alpha": 0.001, "sigma": 0.25})

        assert response.status_code == 200
        data = response.json()
        assert len(data) == 1
        assert data[0]["input_id"] == "img-0"
        assert data[0]["c_star"] == 3
        assert data[0]["sigma"] == 0.25
        assert data[0]["radius"] > 0

    def test_certify_passes_query_values(self, mock_certification_service):
        """Test POST /certify/{method} forwards method, alpha and sigma"""
        mock_certification_service.certify_records.return_value = [
            CertificateRow(input_id="img-0", method="bonferroni", sigma=0.5, alpha=0.01, abstain=True)
        ]

        response = client.post("/api/v1/certify/bonferroni", json=RECORDS, params={"alpha": 0.01})

        assert response.status_code == 200
        assert response.json()[0]["abstain"] is True
        args, kwargs = mock_certification_service.certify_records.call_args
        assert args[1] == "bonferroni"
        assert kwargs == {"alpha": 0.01, "sigma": None}

    def test_unknown_method(self):
        """Test POST /certify/{method} - method outside the enumeration"""
        response = client.post("/api/v1/certify/hoeffding", json=RECORDS)

        assert response.status_code == 422

    def test_count_sum_mismatch(self):
        """Test POST /certify/{method} - counts that do not sum to n"""
        bad = [{"input_id": "img-0", "phase": "estimation", "n": 10, "counts": {"0": 9}}]

        response = client.post("/api/v1/certify/bonferroni", json=bad)

        assert response.status_code == 422

    def test_alpha_out_of_range(self):
        """Test POST /certify/{method} - alpha must lie in (0, 1)"""
        response = client.post("/api/v1/certify/cpm", json=RECORDS, params={"alpha": 1.5})

        assert response.status_code == 422

    def test_data_error(self, mock_certification_service):
        """Test POST /certify/{method} - invalid records give 400"""
        mock_certification_service.certify_records.side_effect = DataError("no selection record", record="img-0")

        response = client.post("/api/v1/certify/cpm", json=RECORDS)

        assert response.status_code == 400
        assert "img-0" in response.json()["detail"]

    def test_solver_error(self, mock_certification_service):
        """Test POST /certify/{method} - solver failure gives 422"""
        mock_certification_service.certify_records.side_effect = SolverError("bisection did not converge")

        response = client.post("/api/v1/certify/cpm", json=RECORDS)

        assert response.status_code == 422
        assert "bisection" in response.json()["detail"]

    def test_unexpected_error(self, mock_certification_service):
        """Test POST /certify/{method} - unexpected failure gives 500"""
        mock_certification_service.certify_records.side_effect = Exception("oracle crashed")

        response = client.post("/api/v1/certify/cpm", json=RECORDS)

        assert response.status_code == 500
        assert "Error certifying records" in response.json()["detail"]

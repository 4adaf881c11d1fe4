from app.models.reports import CertificateRow, CoverageReport, CurveRow, PubReport, RunManifest, SelfCheckResult

__all__ = ["CertificateRow", "CoverageReport", "CurveRow", "PubReport", "RunManifest", "SelfCheckResult"]

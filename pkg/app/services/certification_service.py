import logging

from app.core.config import settings
from app.core.errors import ConfigurationError, DataError, SolverError
from app.models.reports import CertificateRow
from app.numerics.intervals import clopper_pearson_lower
from app.schemas.bounds import BinomialObservation
from app.schemas.certificates import CertifyMethod
from app.schemas.counts import ClassCounts, CountsRecord, Phase, RejectedRecord
from app.schemas.sampling import SamplingConfig
from app.services.cpm import certify_bonferroni_full, certify_cpm, certify_pearson_clopper_mono
from simulators.oracles import ESTIMATION_STREAM, SELECTION_STREAM, ClassifierOracle, collect_counts
from simulators.read_counts import group_by_input

logger = logging.getLogger(__name__)

_NEEDS_SELECTION = {"pearson_clopper", "cpm"}


class CertificationService:
    """Turns selection/estimation counts into certificate rows"""

    def certify_counts(self, input_id: str, method: CertifyMethod, estimation: ClassCounts,
                       selection: ClassCounts | None = None, alpha: float | None = None,
                       sigma: float | None = None, model_tag: str | None = None) -> CertificateRow:
        """Certify one input; raises DataError when the method needs a missing selection round"""
        alpha = alpha if alpha is not None else settings.ALPHA
        sigma = sigma if sigma is not None else settings.SIGMA
        if method in _NEEDS_SELECTION and selection is None:
            raise DataError(f"method {method!r} needs a selection round", record=input_id)

        row = dict(input_id=input_id, method=method, model_tag=model_tag, sigma=sigma, alpha=alpha,
                   n=estimation.total)
        if method == "pearson_clopper":
            i1 = max(range(selection.num_classes), key=lambda i: (selection.counts[i], -i))
            obs = BinomialObservation(successes=estimation.counts[i1], trials=estimation.total)
            radius = certify_pearson_clopper_mono(obs, alpha, sigma)
            lower = clopper_pearson_lower(obs, alpha)
            row.update(i1=i1, lower_p1=lower.value)
        else:
            if method == "cpm":
                certificate = certify_cpm(selection, estimation, alpha, sigma)
            elif method == "bonferroni":
                certificate = certify_bonferroni_full(estimation, alpha, sigma)
            else:
                raise ConfigurationError(f"unknown certification method {method!r}")
            radius = certificate.radius
            row.update(c_star=certificate.c_star, i1=certificate.i1,
                       lower_p1=certificate.lower_p1.value, max_upper=certificate.max_upper.value)

        row.update(radius=radius.value, abstain=radius.abstain)
        return CertificateRow(**row)

    def _certify_phases(self, input_id: str, phases: dict[Phase, CountsRecord], method: CertifyMethod,
                        alpha: float | None, sigma: float | None) -> CertificateRow:
        estimation_record = phases.get("estimation")
        if estimation_record is None:
            raise DataError("no estimation record", record=input_id)
        selection_record = phases.get("selection")

        num_classes = max(record.min_classes for record in phases.values())
        estimation = estimation_record.to_class_counts(num_classes)
        selection = selection_record.to_class_counts(num_classes) if selection_record else None
        record_sigma = estimation_record.sigma or (selection_record.sigma if selection_record else None)
        return self.certify_counts(
            input_id, method, estimation, selection,
            alpha=alpha,
            sigma=record_sigma if record_sigma is not None else sigma,
            model_tag=estimation_record.model_tag,
        )

    def certify_records(self, records: list[CountsRecord], method: CertifyMethod,
                        alpha: float | None = None, sigma: float | None = None,
                        rejected: list[RejectedRecord] | None = None) -> list[CertificateRow]:
        """
        Certify every input in a counts file, ordered by input id.

        A record-level problem (missing phase, class mismatch) becomes an error
        row and the run continues. Inputs with a ``rejected`` line get one error
        row naming that line and none of their other records are certified.
        Solver errors propagate.
        """
        alpha = alpha if alpha is not None else settings.ALPHA
        sigma = sigma if sigma is not None else settings.SIGMA
        failed: dict[str, RejectedRecord] = {}
        for entry in rejected or []:
            failed.setdefault(entry.input_id, entry)
        seen: set[tuple[str, str]] = set()
        for record in records:
            key = (record.input_id, record.phase)
            if key in seen:
                logger.error(f"Rejected duplicate {record.phase} record for {record.input_id!r}")
                failed.setdefault(record.input_id,
                                  RejectedRecord(input_id=record.input_id, message=f"duplicate {record.phase} record"))
            seen.add(key)

        rows = [
            CertificateRow(input_id=input_id, method=method, sigma=sigma, alpha=alpha, abstain=True,
                           error=entry.describe())
            for input_id, entry in failed.items()
        ]
        usable = [record for record in records if record.input_id not in failed]
        for input_id, phases in sorted(group_by_input(usable).items()):
            try:
                rows.append(self._certify_phases(input_id, phases, method, alpha, sigma))
            except SolverError:
                raise
            except ValueError as e:
                logger.warning(f"Skipping {input_id!r}: {e}")
                rows.append(CertificateRow(input_id=input_id, method=method, sigma=sigma, alpha=alpha,
                                           abstain=True, error=str(e)))
        rows.sort(key=lambda row: row.input_id)
        certified = sum(1 for row in rows if row.radius is not None)
        logger.info(f"Certified {certified} of {len(rows)} inputs with {method}")
        return rows

    def certify_oracle(self, oracle: ClassifierOracle, input_id: str, method: CertifyMethod,
                       config: SamplingConfig | None = None, alpha: float | None = None) -> CertificateRow:
        """Sample both rounds from the oracle on disjoint streams, then certify"""
        config = config if config is not None else SamplingConfig.from_settings()
        selection = collect_counts(oracle, input_id, config.n0, config.seed, SELECTION_STREAM, config.batch)
        estimation = collect_counts(oracle, input_id, config.n, config.seed, ESTIMATION_STREAM, config.batch)
        return self.certify_counts(input_id, method, estimation, selection, alpha=alpha, sigma=config.sigma)

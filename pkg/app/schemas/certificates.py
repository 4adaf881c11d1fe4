from typing import Literal

from pydantic import BaseModel, Field, model_validator

from app.schemas.bounds import ConfidenceBound, CertifiedRadius

CertifyMethod = Literal["pearson_clopper", "bonferroni", "cpm"]


class Partition(BaseModel):
    """
    Class buckets from the selection round: the top class i1, singleton attack
    buckets in peel order, and the meta-class of the remaining classes.
    """
    i1: int
    i2: int
    attack_singletons: list[int]
    meta_class: list[int]
    c_star: int = Field(ge=2)

    @model_validator(mode="after")
    def _check_buckets(self) -> "Partition":
        singles = set(self.attack_singletons)
        meta = set(self.meta_class)
        if self.i1 in singles or self.i1 in meta:
            raise ValueError("i1 must not appear in an attack bucket")
        if singles & meta:
            raise ValueError("singleton buckets and the meta-class overlap")
        expected = len(self.attack_singletons) + (1 if self.meta_class else 0) + 1
        if self.c_star != expected:
            raise ValueError(f"c_star={self.c_star} but the buckets give {expected}")
        return self

    @property
    def buckets(self) -> list[list[int]]:
        """Attack buckets: each singleton, then the meta-class when nonempty"""
        groups = [[i] for i in self.attack_singletons]
        if self.meta_class:
            groups.append(list(self.meta_class))
        return groups


class CpmCertificate(BaseModel):
    """Certified radius with the bounds and risk allocation that produced it"""
    radius: CertifiedRadius
    lower_p1: ConfidenceBound
    max_upper: ConfidenceBound
    i1: int
    i2: int | None = None
    partition: Partition | None = None
    alpha: float = Field(gt=0.0, lt=1.0)
    alpha_prime: float = Field(gt=0.0, lt=1.0)

    @property
    def c_star(self) -> int | None:
        return self.partition.c_star if self.partition is not None else None

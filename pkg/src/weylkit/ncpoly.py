from typing import Mapping, Sequence

import numpy as np

# Слово - кортеж порядков производных: (2, 0) означает произведение Q″·Q.
Word = tuple[int, ...]


class NCPolynomial:
    """Некоммутативный многочлен от символов Q, Q′, Q″, … с комплексными коэффициентами

    Пустое слово соответствует единичной матрице. Коэффициенты рекурсии для M₊
    двоично-рациональные, поэтому арифметика над ними в float точна.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Word, complex] | None = None):
        self.terms: dict[Word, complex] = {
            tuple(word): complex(coef) for word, coef in (terms or {}).items() if coef != 0
        }

    @classmethod
    def identity(cls, coef: complex = 1.0) -> "NCPolynomial":
        return cls({(): coef})

    @classmethod
    def symbol(cls, order: int = 0, coef: complex = 1.0) -> "NCPolynomial":
        return cls({(order,): coef})

    def __add__(self, other: "NCPolynomial") -> "NCPolynomial":
        terms = dict(self.terms)
        for word, coef in other.terms.items():
            terms[word] = terms.get(word, 0) + coef
        return NCPolynomial(terms)

    def __neg__(self) -> "NCPolynomial":
        return NCPolynomial({w: -c for w, c in self.terms.items()})

    def __sub__(self, other: "NCPolynomial") -> "NCPolynomial":
        return self + (-other)

    def __mul__(self, other) -> "NCPolynomial":
        if isinstance(other, NCPolynomial):
            terms: dict[Word, complex] = {}
            for w1, c1 in self.terms.items():
                for w2, c2 in other.terms.items():
                    word = w1 + w2
                    terms[word] = terms.get(word, 0) + c1 * c2
            return NCPolynomial(terms)
        return NCPolynomial({w: c * other for w, c in self.terms.items()})

    def __rmul__(self, scalar) -> "NCPolynomial":
        return NCPolynomial({w: scalar * c for w, c in self.terms.items()})

    def __eq__(self, other) -> bool:
        if not isinstance(other, NCPolynomial):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def derivative(self) -> "NCPolynomial":
        """Производная по x по правилу Лейбница (порядок множителей сохраняется)"""
        terms: dict[Word, complex] = {}
        for word, coef in self.terms.items():
            for i in range(len(word)):
                shifted = word[:i] + (word[i] + 1,) + word[i + 1 :]
                terms[shifted] = terms.get(shifted, 0) + coef
        return NCPolynomial(terms)

    def reflect(self) -> "NCPolynomial":
        """Подстановка Q^{(j)} → (−1)^j Q^{(j)}"""
        return NCPolynomial({w: c * (-1) ** sum(w) for w, c in self.terms.items()})

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self.terms.values())

    def max_order(self) -> int:
        """Старший порядок производной (−1 для констант)"""
        return max((max(w) for w in self.terms if w), default=-1)

    def weights(self) -> set[int]:
        """Суммарные порядки производных в мономах"""
        return {sum(w) for w in self.terms}

    def evaluate(self, derivatives: Sequence[np.ndarray], dim: int) -> np.ndarray:
        """Значение при Q^{(j)} = derivatives[j]"""
        result = np.zeros((dim, dim), dtype=complex)
        for word, coef in self.terms.items():
            product = np.eye(dim, dtype=complex)
            for order in word:
                product = product @ derivatives[order]
            result += coef * product
        return result

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for word, coef in sorted(self.terms.items()):
            letters = " ".join("Q" + "'" * j for j in word) or "I"
            parts.append(f"({coef:g})·{letters}")
        return " + ".join(parts)

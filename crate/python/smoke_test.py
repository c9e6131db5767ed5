"""Smoke test for the pyregen extension module.

Build and install first:  pip install --no-build-isolation ./crates/py
"""

from fractions import Fraction

import pyregen


def main() -> None:
    assert pyregen.gf_mul(0x02, 0x80) == 0x1D
    assert pyregen.gf_mul(7, pyregen.gf_inv(7)) == 1
    assert pyregen.gf_add(5, 5) == 0

    assert pyregen.functional_capacity(2, 2, 1, 1) == Fraction(3, 2)
    assert pyregen.functional_capacity(2, 2, Fraction(1), "2") == 2
    alpha, gamma = pyregen.msr_point(2, 2, 2)
    assert pyregen.functional_capacity(2, 2, alpha, gamma) == 2
    assert pyregen.single_parity_ratio(51, 2) == Fraction(17, 19)
    assert pyregen.large_n_ratio_approx(2) == Fraction(8, 9)

    csv = pyregen.tradeoff_csv().splitlines()
    assert len(csv) == 51 and csv[1] == "1,25.5,25.5,25.5"

    report = pyregen.asymptotic_ratio(3, 2, 2, 100, Fraction(1, 2))
    assert report["m"] == 100

    code = pyregen.Code.toy().lift("cyclic")
    assert (code.n, code.k, code.d) == (4, 3, 3)
    assert code.alpha == [3, 3, 3, 3] and code.gamma == 6
    data = bytes(range(1, 9))
    inst = code.store(data)
    assert inst.node(1) == data[1:4]
    assert inst.reconstruct([2, 3, 4]) == data
    rebuilt, sent = inst.repair(1, [2, 3, 4])
    assert rebuilt == inst.node(1) and sum(sent.values()) == 6
    assert inst.verify()["all_pass"]
    inst.corrupt(2, 0)
    assert not inst.verify()["all_pass"]

    perm = pyregen.Code.parse("toy").lift("perm")
    assert perm.file_size == 48 and perm.alpha == [18] * 4
    assert perm.lift_chain == ["perm"]

    result = pyregen.run_scenario("toy-perm-433")
    assert result["pass"] and result["normalized_rate"] == "8/3"
    audit = pyregen.audit_scenario("toy-perm-433", 1)
    assert audit["measured_beta2"] == 12 and audit["stated_beta2"] == "18"
    assert "msr-perm-633" in pyregen.scenarios()

    try:
        pyregen.Code.msr(6, 2).lift("perm")
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")

    print("pyregen smoke test passed")


if __name__ == "__main__":
    main()

"""Itemized neuron counts of the demo systems against the published totals."""

from stick import systems as S


def main():
    for name, (cfg_cls, build) in S.SYSTEM_BUILDERS.items():
        for line in build(cfg_cls()).count_report().lines():
            print(line)
        print()


if __name__ == "__main__":
    main()

"""Analysis chain for precision vibrational spectroscopy of HD+.

Subpackages cover the effective spin Hamiltonian and its uncertainty
model (angular), magnetic-field maps (zeeman), Lorentzian line fitting
(lineshape), systematic-shift bookkeeping (systematics), weighted
composite frequencies (composite), fundamental-constant extraction
(constants), frequency-chain metrology (metrology) and the trapped-ion
carrier-strength model (carrier).
"""

__version__ = "0.1.0"

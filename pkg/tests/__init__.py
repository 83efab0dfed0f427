# Integration and command-line tests for photonet

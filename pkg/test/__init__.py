# Empty init file to define the test module.